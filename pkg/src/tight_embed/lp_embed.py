"""Lipschitz embedding of a finite subset of l_p with compression at least 2^mu(t) r t.

The target is an l_s-sum of blocks l_p^{m(k,n)}, one block per pair
(annulus k, scale n).  Block k,n holds 2^-n times the coordinate
truncation P_{m(k,n)} x, with m(k,n) the smallest dimension whose
truncation error on the ball B_k is at most sigma(-n)/eta.  Points are
glued across consecutive annuli by the linear weight lambda_x.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import schema
from ._parallel import chunked_map
from .moduli import ModulusCurve, generalized_inverse
from .spaces import (BlockSpace, BlockVector, LpPointSet, ball_members, dyadic_annulus_index,
                     exponent_to_json, lp_norm)
from .verify import EmbeddingReport, make_report

log = logging.getLogger(__name__)

UPPER_LIPSCHITZ = 9.0
FAR_NORM_CONSTANT = 3.0
SAME_ANNULUS_CONSTANT = 5.0


class PlanError(ValueError):
    pass


def eta_threshold(r: float) -> float:
    """Smallest eta for which (eta - 2) / (16 eta) >= r; infinite when r >= 1/16."""
    return 2.0 / (1.0 - 16.0 * r) if r < 1 / 16 else math.inf


def default_eta(r: float) -> float:
    thr = eta_threshold(r)
    return max(100.0, thr + 1.0) if math.isfinite(thr) else 100.0


@dataclass(frozen=True, eq=False)
class LpEmbeddingPlan:
    eta: float
    r: float
    mu: ModulusCurve
    s: float
    p: float
    dim: int
    k_min: int
    k_max: int
    n_max: int
    sigma: np.ndarray = field(repr=False)  # sigma[n - 1] = sigma(-n), n = 1..n_max+1
    m: dict = field(repr=False)            # (k, n) -> truncation dimension

    @property
    def k_range(self) -> tuple[int, int]:
        return self.k_min, self.k_max + 1

    @property
    def terms(self) -> int:
        return self.n_max + 1

    def psi(self, k: int, n: int) -> int:
        lo, hi = self.k_range
        if not (lo <= k <= hi and 1 <= n <= self.terms):
            raise KeyError(f"(k, n) = ({k}, {n}) outside the planned grid")
        return (k - lo) * self.terms + (n - 1)

    @cached_property
    def space(self) -> BlockSpace:
        lo, hi = self.k_range
        blocks = [(self.p, self.m[k, n]) for k in range(lo, hi + 1) for n in range(1, self.terms + 1)]
        return BlockSpace(self.s, tuple(blocks))

    def to_dict(self) -> dict:
        lo, hi = self.k_range
        grid = [(k, n) for k in range(lo, hi + 1) for n in range(1, self.terms + 1)]
        return {
            "eta": self.eta, "r": self.r, "s": exponent_to_json(self.s), "p": exponent_to_json(self.p),
            "dim": self.dim, "k_range": [lo, hi], "n_max": self.n_max,
            "sigma": self.sigma.tolist(),
            "m": [[k, n, self.m[k, n]] for k, n in grid],
            "psi": [[k, n, self.psi(k, n)] for k, n in grid],
            "mu": self.mu.to_spec(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LpEmbeddingPlan":
        from .spaces import parse_exponent

        lo, hi = obj["k_range"]
        m = {(int(k), int(n)): int(v) for k, n, v in obj["m"]}
        plan = cls(float(obj["eta"]), float(obj["r"]), ModulusCurve.from_spec(obj["mu"]),
                   parse_exponent(obj["s"]), parse_exponent(obj["p"]), int(obj["dim"]),
                   int(lo), int(hi) - 1, int(obj["n_max"]), np.asarray(obj["sigma"], dtype=float), m)
        for k, n, j in obj.get("psi", []):
            if plan.psi(int(k), int(n)) != int(j):
                raise PlanError("psi table does not match the row-major enumeration")
        return plan


def bap_truncation(x, m: int) -> np.ndarray:
    """Coordinate projection onto the first m coordinates."""
    x = np.asarray(x, dtype=float)
    if not (0 <= m <= x.shape[-1]):
        raise ValueError(f"truncation dimension {m} outside [0, {x.shape[-1]}]")
    out = np.zeros_like(x)
    out[..., :m] = x[..., :m]
    return out


def truncation_errors(points: np.ndarray, p: float) -> np.ndarray:
    """errors[i, m] = ||x_i - P_m x_i||_p for m = 0..dim."""
    n, dim = points.shape
    err = np.zeros((n, dim + 1))
    for m in range(dim):
        err[:, m] = lp_norm(points[:, m:], p, axis=1)
    return err


def make_plan(M: LpPointSet, mu: ModulusCurve, eta: float | None = None, r: float = 0.06,
              s: float = 2.0, strict: bool = True, max_terms: int = 200) -> LpEmbeddingPlan:
    """Fix every finite choice of the construction for the point set M.

    ``strict=False`` admits r >= 1/16 (no guarantee; the CLI warns) so
    that the certification can still be run.
    """
    if eta is None:
        eta = default_eta(r)
    if not eta > 2:
        raise PlanError(f"eta must exceed 2, got {eta}")
    if not r > 0:
        raise PlanError(f"r must be positive, got {r}")
    if strict and r >= 1 / 16:
        raise PlanError(f"r must be below 1/16, got {r}")
    if M.n < 2:
        raise PlanError("need at least two points")
    dm = M.distance_matrix()
    d_min = dm[~np.eye(M.n, dtype=bool)].min()
    if not d_min > 0:
        raise PlanError("all points coincide" if dm.max() == 0 else "duplicate points")

    norms = M.norms
    ks = [dyadic_annulus_index(v) for v in norms[norms > 0]]
    k_min, k_max = min(ks), max(ks)

    sigmas = []
    n_max = None
    for n in range(1, max_terms + 1):
        while len(sigmas) < n + 1:
            sigmas.append(generalized_inverse(mu, -(len(sigmas) + 1.0)))
        if sigmas[n] <= d_min:  # sigma(-(n+1))
            n_max = n
            break
    if n_max is None:
        raise PlanError(f"sigma(-n) stays above the minimum distance {d_min:g} for n <= {max_terms}")
    sigma = np.array(sigmas[: n_max + 1])
    if not np.all(np.isfinite(sigma)):
        raise PlanError("mu never reaches the required levels (sigma is infinite)")

    errors = truncation_errors(M.points, M.p)
    m = {}
    for k in range(k_min, k_max + 2):
        members = ball_members(M, k)
        worst = errors[members].max(axis=0) if members.size else np.zeros(M.dim + 1)
        for n in range(1, n_max + 2):
            ok = np.flatnonzero(worst <= sigma[n - 1] / eta)
            m[k, n] = int(ok[0])
    return LpEmbeddingPlan(float(eta), float(r), mu, float(s), M.p, M.dim, k_min, k_max, n_max, sigma, m)


def _add_slice(plan: LpEmbeddingPlan, k: int, x: np.ndarray, weight: float, row: np.ndarray) -> None:
    off = plan.space.offsets
    for n in range(1, plan.terms + 1):
        j = plan.psi(k, n)
        mk = plan.m[k, n]
        row[off[j]:off[j] + mk] += weight * 2.0 ** -n * x[:mk]


def slice_embed(plan: LpEmbeddingPlan, k: int, x) -> BlockVector:
    """f_k(x) = sum_n 2^-n P_{m(k,n)} x, block psi(k, n) per term."""
    x = np.asarray(x, dtype=float)
    if x.shape != (plan.dim,):
        raise ValueError(f"point must have {plan.dim} coordinates")
    if float(lp_norm(x, plan.p)) > math.ldexp(1.0, k + 1):
        raise ValueError(f"point lies outside B_{k}")
    row = np.zeros(plan.space.dim)
    _add_slice(plan, k, x, 1.0, row)
    return plan.space.vector(row)


@dataclass(frozen=True, eq=False)
class LpEmbedding:
    plan: LpEmbeddingPlan
    values: np.ndarray = field(repr=False)  # dense rows in plan.space

    @property
    def space(self) -> BlockSpace:
        return self.plan.space

    def value(self, i: int) -> BlockVector:
        return self.space.vector(self.values[i])

    def pair_distances(self, i: np.ndarray, j: np.ndarray, chunk: int = 2048) -> np.ndarray:
        parts = chunked_map(lambda a, b: self.space.norms(self.values[i[a:b]] - self.values[j[a:b]]),
                            len(i), chunk)
        return np.concatenate(parts) if parts else np.zeros(0)

    def image_distance_matrix(self) -> np.ndarray:
        n = self.values.shape[0]
        i, j = np.triu_indices(n, 1)
        d = np.zeros((n, n))
        d[i, j] = self.pair_distances(i, j)
        return d + d.T

    def to_dict(self, M: LpPointSet) -> dict:
        values = []
        for i in range(self.values.shape[0]):
            v = self.value(i)
            values.append({"point": i, "blocks": {str(j): x.tolist() for j, x in sorted(v.parts.items())}})
        return {"type": "lp_embedding", "space": self.space.to_spec(), "plan": self.plan.to_dict(),
                "source": schema.space_to_json(M), "values": values}

    @classmethod
    def from_dict(cls, obj: dict) -> tuple["LpEmbedding", LpPointSet]:
        if obj.get("type") != "lp_embedding":
            raise ValueError("not an lp_embedding document")
        plan = LpEmbeddingPlan.from_dict(obj["plan"])
        space = plan.space
        if BlockSpace.from_spec(obj["space"]) != space:
            raise ValueError("block space descriptor does not match the plan")
        M = schema.space_from_json(obj["source"])
        vals = np.zeros((M.n, space.dim))
        for entry in obj["values"]:
            parts = {int(j): np.asarray(x, dtype=float) for j, x in entry["blocks"].items()}
            vals[int(entry["point"])] = space.dense(BlockVector(space, parts))
        return cls(plan, vals), M


def embed(plan: LpEmbeddingPlan, M: LpPointSet) -> LpEmbedding:
    """f(x) = lambda_x f_k(x) + (1 - lambda_x) f_{k+1}(x) on annulus k; f(0) = 0."""
    if M.dim != plan.dim or M.p != plan.p:
        raise ValueError("point set does not match the plan (dimension or exponent)")
    values = np.zeros((M.n, plan.space.dim))
    for i, (x, nx) in enumerate(zip(M.points, M.norms)):
        if nx == 0:
            continue
        k = dyadic_annulus_index(nx)
        if not (plan.k_min <= k <= plan.k_max):
            raise ValueError(f"point {i} lies in annulus {k}, outside the planned range {plan.k_range}")
        lam = (math.ldexp(1.0, k + 1) - nx) / math.ldexp(1.0, k)
        _add_slice(plan, k, x, lam, values[i])
        _add_slice(plan, k + 1, x, 1.0 - lam, values[i])
    return LpEmbedding(plan, values)


def range_parameters(plan: LpEmbeddingPlan, r: float | None = None) -> tuple[float, float, float]:
    """(sigma(-1), r_eff, D) with r_eff d <= D(f) <= D r_eff d on pairs with d >= sigma(-1)."""
    r = plan.r if r is None else r
    s1 = float(plan.sigma[0])
    r_eff = r * 2.0 ** plan.mu(s1)
    return s1, r_eff, UPPER_LIPSCHITZ / r_eff


def verify_sandwich(emb: LpEmbedding, M: LpPointSet, mu: ModulusCurve | None = None,
                    r: float | None = None, slack: float = 1e-9) -> EmbeddingReport:
    """Check 2^mu(d) r d <= ||f(x) - f(y)|| <= 9 d on every pair, plus 3d when one norm is at most half the other and 5d inside one annulus."""
    mu = emb.plan.mu if mu is None else mu
    r = emb.plan.r if r is None else r
    n = M.n
    i, j = np.triu_indices(n, 1)
    D = emb.pair_distances(i, j)
    X = M.points
    d = lp_norm(X[i] - X[j], M.p, axis=1)
    lower = 2.0 ** mu(d) * r * d if len(d) else d
    upper = UPPER_LIPSCHITZ * d
    rep = make_report("lp_sandwich", i, j, d, D, lower, upper, slack=slack, relative=True)

    norms = M.norms
    small, large = np.minimum(norms[i], norms[j]), np.maximum(norms[i], norms[j])
    far = small <= 0.5 * large
    ann = np.array([dyadic_annulus_index(v) if v > 0 else np.iinfo(np.int64).min for v in norms])
    same = (norms[i] > 0) & (norms[j] > 0) & (ann[i] == ann[j])
    ok3 = ~far | (D <= FAR_NORM_CONSTANT * d * (1 + slack))
    ok5 = ~same | (D <= SAME_ANNULUS_CONSTANT * d * (1 + slack))
    rep.passed &= ok3 & ok5
    ok_hi = D <= upper * (1 + slack)
    ok_lo = D >= lower * (1 - slack)
    rep.checks.update({
        "upper: 9-Lipschitz": bool(np.all(ok_hi)),
        "lower: 2^mu(d) r d": bool(np.all(ok_lo)),
        "norm ratio >= 2: D <= 3d": bool(np.all(ok3)),
        "same annulus: D <= 5d": bool(np.all(ok5)),
    })
    s1, r_eff, D_range = range_parameters(emb.plan, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        rep.info.update({
            "eta": emb.plan.eta, "r": r, "n_max": emb.plan.n_max, "k_range": list(emb.plan.k_range),
            "max_D_over_d": float(np.max(D / d)) if len(d) else None,
            "min_D_over_lower": float(np.min(D / lower)) if len(d) else None,
            "far_norm_pairs": int(far.sum()), "same_annulus_pairs": int(same.sum()),
            "range_start": s1, "range_r_eff": r_eff, "range_D": D_range,
        })
    if emb.plan.eta < eta_threshold(r):
        rep.note = "eta below 2/(1-16r): the lower bound is not guaranteed by the construction"
    return rep
