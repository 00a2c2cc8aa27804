"""Sweep the l_p construction over exponents and sample sizes and print the worst sandwich ratios."""
from __future__ import annotations

import argparse
import math
from dataclasses import dataclass, field

import numpy as np

from tight_embed import ModulusCurve, embed, exp_dominate, make_plan, verify_sandwich
from tight_embed.spaces import random_points


@dataclass
class SweepConfig:
    exponents: list[float] = field(default_factory=lambda: [1.0, 2.0, math.inf])
    sizes: list[int] = field(default_factory=lambda: [20, 60])
    dim: int = 8
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    eta: float = 100.0
    r: float = 0.06
    outer_s: float = 2.0


def run(cfg: SweepConfig) -> list[dict]:
    mu = exp_dominate(ModulusCurve.exp_floor())
    rows = []
    for p in cfg.exponents:
        for n in cfg.sizes:
            for seed in cfg.seeds:
                M = random_points(n, cfg.dim, p, seed=seed)
                plan = make_plan(M, mu, eta=cfg.eta, r=cfg.r, s=cfg.outer_s)
                rep = verify_sandwich(embed(plan, M), M)
                ok = rep.d_x > 0
                rows.append({
                    "p": p, "n": n, "seed": seed, "verdict": rep.verdict,
                    "min D/lower": float(np.min(rep.d_y[ok] / rep.lower[ok])),
                    "max D/upper": float(np.max(rep.d_y[ok] / rep.upper[ok])),
                    "blocks": plan.n_max,
                })
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=8)
    ap.add_argument("--eta", type=float, default=100.0)
    ap.add_argument("--r", type=float, default=0.06)
    args = ap.parse_args()
    rows = run(SweepConfig(dim=args.dim, eta=args.eta, r=args.r))
    print(f"{'p':>5} {'n':>4} {'seed':>4} {'blocks':>6} {'min D/lower':>12} {'max D/upper':>12}  verdict")
    for row in rows:
        print(f"{row['p']:>5} {row['n']:>4} {row['seed']:>4} {row['blocks']:>6} "
              f"{row['min D/lower']:>12.4f} {row['max D/upper']:>12.4f}  {'pass' if row['verdict'] else 'FAIL'}")


if __name__ == "__main__":
    main()
