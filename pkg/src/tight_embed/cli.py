"""Command-line front end.

Exit codes: 0 certified pass, 2 invalid input, 3 certified failure,
4 internal error.  Warnings go to the log and never change the code.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path


from . import lp_embed, schema, spaces, stable_embed, verify
from .moduli import ClassViolation, ModulusCurve, exp_dominate

log = logging.getLogger("tight_embed")

EXIT_PASS, EXIT_INVALID, EXIT_FAIL, EXIT_INTERNAL = 0, 2, 3, 4


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    input: Path | None = None
    image: Path | None = None
    embedding: Path | None = None
    modulus: str | None = None
    rho: str | None = None
    omega: str | None = None
    eta: float | None = None
    r: float | None = None
    outer_s: float = 2.0
    distortion: float = 1.0
    range: tuple[float, float] | None = None
    snowflake: float | None = None
    tau: float | None = None
    basepoint: int = 0
    seed: int | None = None
    kind: str = "kalton"
    p: str = "2"
    dim: int = 8
    count: int = 100
    delta: float = 0.1
    out: Path | None = None
    csv: Path | None = None

    def __post_init__(self):
        if self.eta is not None and not self.eta > 2:
            raise InputError("--eta must exceed 2")
        if self.r is not None and not self.r > 0:
            raise InputError("--r must be positive")
        if self.outer_s < 1:
            raise InputError("--outer-s must be >= 1")
        if self.distortion < 1:
            raise InputError("--D must be >= 1")
        if self.range is not None and not (0 < self.range[0] <= self.range[1]):
            raise InputError("--range needs 0 < s1 <= s2")
        if self.snowflake is not None and not (0 < self.snowflake < 1):
            raise InputError("--snowflake exponent must lie in (0, 1)")
        if self.command == "fixtures" and self.seed is None and self.kind not in ("two-point", "line"):
            raise InputError("--seed is mandatory for randomized fixtures")


def _range_arg(text: str) -> tuple[float, float]:
    a, sep, b = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("expected s1:s2")
    return float(a), float(b)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tight-embed", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        p.add_argument("--input", type=Path, required=needs_input)
        p.add_argument("--out", type=Path)
        p.add_argument("--csv", type=Path)

    p = sub.add_parser("embed-lp", help="embed a point set of l_p into a block l_s-sum")
    common(p)
    p.add_argument("--modulus", default="exp_floor", help="phi or mu curve: JSON, file, or family[:alpha]")
    p.add_argument("--eta", type=float)
    p.add_argument("--r", type=float, default=0.06)
    p.add_argument("--outer-s", type=float, default=2.0)

    p = sub.add_parser("embed-stable", help="embed a finite metric space on Kalton coordinates")
    common(p)
    p.add_argument("--rho", default="power_rho:0.5")
    p.add_argument("--omega", default="power_omega:0.5")
    p.add_argument("--basepoint", type=int, default=0)

    p = sub.add_parser("verify", help="certify a map or re-verify an embedding file")
    p.add_argument("--input", type=Path)
    p.add_argument("--image", type=Path)
    p.add_argument("--embedding", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--csv", type=Path)
    p.add_argument("--range", type=_range_arg)
    p.add_argument("--r", type=float)
    p.add_argument("--D", dest="distortion", type=float, default=1.0)
    p.add_argument("--snowflake", type=float)
    p.add_argument("--tau", type=float)

    p = sub.add_parser("moduli", help="empirical compression/expansion profile as CSV")
    p.add_argument("--input", type=Path)
    p.add_argument("--image", type=Path)
    p.add_argument("--embedding", type=Path)
    p.add_argument("--csv", type=Path)

    p = sub.add_parser("fixtures", help="write a deterministic fixture space")
    p.add_argument("--kind", choices=["kalton", "net", "random-points", "random-metric", "two-point", "line"],
                   default="kalton")
    p.add_argument("--seed", type=int)
    p.add_argument("--p", default="2")
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--out", type=Path)
    return ap


def config_from_args(argv=None) -> tuple[RunConfig, bool]:
    ns = vars(build_parser().parse_args(argv))
    verbose = ns.pop("verbose")
    ns = {k.replace("-", "_"): v for k, v in ns.items()}
    return RunConfig(**ns), verbose


# ---------------------------------------------------------------------------
# loading


def _load(path: Path):
    try:
        return schema.load_json(path)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from exc


def _emit(cfg: RunConfig, doc: dict | str) -> None:
    text = doc if isinstance(doc, str) else schema.dumps(doc)
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        schema.atomic_write(cfg.out, text)


def _emit_csv(cfg: RunConfig, text: str) -> None:
    if cfg.csv is not None:
        schema.atomic_write(cfg.csv, text)


def _mu_from(text: str) -> ModulusCurve:
    curve = schema.curve_from_arg(text)
    if curve.family == "log2_dominated":
        return curve
    return exp_dominate(curve)


def _finish(cfg: RunConfig, rep: verify.EmbeddingReport, doc: dict) -> int:
    if rep.note:
        log.warning(rep.note)
    _emit(cfg, doc)
    _emit_csv(cfg, rep.to_csv())
    log.info("verdict: %s", "pass" if rep.verdict else "fail")
    return EXIT_PASS if rep.verdict else EXIT_FAIL


# ---------------------------------------------------------------------------
# commands


def cmd_embed_lp(cfg: RunConfig) -> int:
    M = schema.space_from_json(_load(cfg.input))
    if not isinstance(M, spaces.LpPointSet):
        raise InputError("embed-lp needs a 'points' input")
    mu = _mu_from(cfg.modulus)
    r = 0.06 if cfg.r is None else cfg.r
    if r >= 1 / 16:
        log.warning("r = %g is not below 1/16; the sandwich is not guaranteed", r)
    if cfg.eta is not None and cfg.eta < lp_embed.eta_threshold(r):
        log.warning("eta = %g is below 2/(1-16r) = %g", cfg.eta, lp_embed.eta_threshold(r))
    plan = lp_embed.make_plan(M, mu, eta=cfg.eta, r=r, s=cfg.outer_s, strict=False)
    emb = lp_embed.embed(plan, M)
    rep = lp_embed.verify_sandwich(emb, M)
    return _finish(cfg, rep, {**emb.to_dict(M), "report": rep.summary()})


def cmd_embed_stable(cfg: RunConfig) -> int:
    X = schema.space_from_json(_load(cfg.input))
    M = schema.as_metric(X)
    if not (0 <= cfg.basepoint < M.n):
        raise InputError("--basepoint out of range")
    rho, omega = stable_embed.regularize_for(M, schema.curve_from_arg(cfg.rho), schema.curve_from_arg(cfg.omega))
    emb = stable_embed.embed_stable(M, cfg.basepoint, rho, omega)
    rep = stable_embed.verify_stable(emb)
    return _finish(cfg, rep, emb.to_dict(rep))


def _embedding_pair(doc: dict):
    """(source metric, image metric, re-verification report) of an embedding document."""
    kind = doc.get("type")
    if kind == "lp_embedding":
        emb, M = lp_embed.LpEmbedding.from_dict(doc)
        X = M.metric()
        image = spaces.FiniteMetricSpace(emb.image_distance_matrix(), X.basepoint)
        return X, image, lp_embed.verify_sandwich(emb, M)
    if kind == "stable_embedding":
        emb = stable_embed.StableEmbedding.from_dict(doc)
        image = spaces.FiniteMetricSpace(emb.distance_matrix(), emb.basepoint)
        return emb.base, image, stable_embed.verify_stable(emb)
    raise InputError("embedding document needs type 'lp_embedding' or 'stable_embedding'")


def _source_and_image(cfg: RunConfig):
    if cfg.embedding is not None:
        return _embedding_pair(_load(cfg.embedding))
    if cfg.input is None:
        raise InputError("give --embedding or --input (with optional --image)")
    X = schema.as_metric(schema.space_from_json(_load(cfg.input)))
    image = X if cfg.image is None else schema.as_metric(schema.space_from_json(_load(cfg.image)))
    return X, image, None


def cmd_verify(cfg: RunConfig) -> int:
    X, image, rep = _source_and_image(cfg)
    if cfg.range is not None:
        r = 1.0 if cfg.r is None else cfg.r
        rep = verify.range_check(X, image, interval=cfg.range, r=r, D=cfg.distortion)
    elif cfg.snowflake is not None:
        rep = verify.snowflake_check(X, image, s=cfg.snowflake)
    elif cfg.tau is not None:
        est = verify.compression_exponent_estimate(X, image, tau=cfg.tau)
        _emit(cfg, {"kind": "compression_exponent", "alpha": est.alpha, "C": est.C,
                    "threshold": est.threshold, "pairs_used": est.pairs_used, "note": est.note})
        return EXIT_PASS
    elif rep is None:
        raise InputError("nothing to verify: choose --range, --snowflake, --tau or --embedding")
    return _finish(cfg, rep, rep.summary())


def cmd_moduli(cfg: RunConfig) -> int:
    X, image, _ = _source_and_image(cfg)
    prof = verify.measure_moduli(X, image)
    if cfg.csv is None:
        sys.stdout.write(prof.to_csv())
    else:
        schema.atomic_write(cfg.csv, prof.to_csv())
    return EXIT_PASS


def make_fixture(cfg: RunConfig) -> dict:
    if cfg.kind == "two-point":
        return schema.space_to_json(spaces.LpPointSet(cfg.p, [[0.0], [1.0]], basepoint=0))
    if cfg.kind == "line":
        return schema.space_to_json(spaces.LpPointSet(cfg.p, [[0.0], [1.0], [3.0]], basepoint=0))
    if cfg.kind == "kalton":
        a = spaces.geometric_weights(cfg.dim)
        return schema.space_to_json(spaces.kalton_compact_sample(cfg.p, cfg.dim, a, cfg.count, cfg.seed))
    if cfg.kind == "net":
        a = spaces.geometric_weights(cfg.dim)
        S = spaces.kalton_compact_sample(cfg.p, cfg.dim, a, cfg.count, cfg.seed)
        net = spaces.epsilon_net(S.metric(), cfg.delta)
        out = schema.space_to_json(spaces.LpPointSet(S.p, S.points[net], basepoint=0))
        out["net_of"] = {"kind": "kalton", "seed": cfg.seed, "count": cfg.count, "delta": cfg.delta,
                         "indices": net.tolist()}
        return out
    if cfg.kind == "random-points":
        return schema.space_to_json(spaces.random_points(cfg.count, cfg.dim, cfg.p, cfg.seed))
    if cfg.kind == "random-metric":
        return schema.space_to_json(spaces.random_metric(cfg.count, cfg.seed))
    raise InputError(f"unknown fixture kind {cfg.kind!r}")


def cmd_fixtures(cfg: RunConfig) -> int:
    _emit(cfg, make_fixture(cfg))
    return EXIT_PASS


COMMANDS = {
    "embed-lp": cmd_embed_lp,
    "embed-stable": cmd_embed_stable,
    "verify": cmd_verify,
    "moduli": cmd_moduli,
    "fixtures": cmd_fixtures,
}


def main(argv=None) -> int:
    try:
        cfg, verbose = config_from_args(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_PASS if exc.code == 0 else EXIT_INVALID
    except InputError as exc:
        logging.basicConfig(format="%(levelname)s: %(message)s")
        log.error("%s", exc)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[cfg.command](cfg)
    except ClassViolation as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except (ValueError, KeyError, OSError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
