"""Embed random finite metrics with power moduli and report how tight the rho/omega sandwich is."""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field

import numpy as np

from tight_embed import ModulusCurve, embed_stable, regularize_for, verify_stable
from tight_embed.spaces import random_metric


@dataclass
class StableConfig:
    exponents: list[float] = field(default_factory=lambda: [0.25, 0.5, 0.75])
    size: int = 30
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])


def run(cfg: StableConfig) -> list[dict]:
    rows = []
    for s in cfg.exponents:
        for seed in cfg.seeds:
            M = random_metric(cfg.size, seed=seed)
            rho, omega = regularize_for(M, ModulusCurve.power_rho(s), ModulusCurve.power_omega(s))
            rep = verify_stable(embed_stable(M, 0, rho, omega))
            rows.append({
                "s": s, "seed": seed, "verdict": rep.verdict,
                "min D/rho": float(np.min(rep.d_y / rep.lower)),
                "max D/omega": float(np.max(rep.d_y / rep.upper)),
                "max N_omega": rep.info["max_N_omega"],
            })
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=30)
    args = ap.parse_args()
    print(f"{'s':>5} {'seed':>4} {'min D/rho':>10} {'max D/omega':>12} {'N_omega':>8}  verdict")
    for row in run(StableConfig(size=args.size)):
        print(f"{row['s']:>5} {row['seed']:>4} {row['min D/rho']:>10.4f} {row['max D/omega']:>12.4f} "
              f"{row['max N_omega']:>8.4f}  {'pass' if row['verdict'] else 'FAIL'}")


if __name__ == "__main__":
    main()
