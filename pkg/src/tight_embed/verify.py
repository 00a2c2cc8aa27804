"""Map-agnostic certification of embeddings between finite metric spaces.

Every check is an exhaustive scan over unordered pairs; nothing is sampled.
Profiles and reports only make claims about the finite input, never
about the infinite spaces the inputs are drawn from.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .spaces import FiniteMetricSpace

SLACK = 1e-9


def _paired(X: FiniteMetricSpace, image: FiniteMetricSpace, pairing: Sequence[int] | None):
    if image.n != X.n:
        raise ValueError(f"cardinality mismatch: {X.n} source points, {image.n} image points")
    if pairing is None:
        pairing = np.arange(X.n)
    pairing = np.asarray(pairing, dtype=int)
    if pairing.shape != (X.n,):
        raise ValueError("pairing must list one image index per source point")
    if np.any(pairing < 0) or np.any(pairing >= image.n):
        raise ValueError("pairing index out of range")
    i, j = X.pairs()
    return i, j, X.d[i, j], image.d[pairing[i], pairing[j]]


def check_bounds(d_y, lower, upper, slack: float = SLACK, relative: bool = True) -> np.ndarray:
    """Row-wise lower <= d_y <= upper with slack; NaN bounds are not applicable."""
    d_y = np.asarray(d_y, dtype=float)
    lower = np.broadcast_to(np.asarray(lower, dtype=float), d_y.shape)
    upper = np.broadcast_to(np.asarray(upper, dtype=float), d_y.shape)
    scale_lo = np.abs(lower) if relative else np.maximum(1.0, np.abs(lower))
    scale_hi = np.abs(upper) if relative else np.maximum(1.0, np.abs(upper))
    with np.errstate(invalid="ignore"):
        ok_lo = np.isnan(lower) | (d_y >= lower - slack * scale_lo)
        ok_hi = np.isnan(upper) | (d_y <= upper + slack * scale_hi)
    return ok_lo & ok_hi


@dataclass
class EmbeddingReport:
    kind: str
    pairs: np.ndarray = field(repr=False)
    d_x: np.ndarray = field(repr=False)
    d_y: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    passed: np.ndarray = field(repr=False)
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    note: str = ""

    @property
    def verdict(self) -> bool:
        return bool(np.all(self.passed)) and all(self.checks.values())

    @property
    def lower_margin(self) -> np.ndarray:
        return self.d_y - self.lower

    @property
    def upper_margin(self) -> np.ndarray:
        return self.upper - self.d_y

    def worst_pair(self) -> tuple[int, int] | None:
        """Pair with the smallest relative margin to either bound."""
        if len(self.d_y) == 0:
            return None
        with np.errstate(invalid="ignore", divide="ignore"):
            lo = np.where(np.isnan(self.lower), np.inf, self.lower_margin / np.abs(self.lower))
            hi = np.where(np.isnan(self.upper), np.inf, self.upper_margin / np.abs(self.upper))
        m = np.minimum(lo, hi)
        k = int(np.argmin(np.nan_to_num(m, nan=np.inf)))
        return int(self.pairs[k, 0]), int(self.pairs[k, 1])

    def merge(self, other: "EmbeddingReport") -> "EmbeddingReport":
        checks = dict(self.checks)
        for k, v in other.checks.items():
            checks[k] = checks.get(k, True) and v
        return EmbeddingReport(
            self.kind,
            np.vstack([self.pairs, other.pairs]),
            np.concatenate([self.d_x, other.d_x]),
            np.concatenate([self.d_y, other.d_y]),
            np.concatenate([self.lower, other.lower]),
            np.concatenate([self.upper, other.upper]),
            np.concatenate([self.passed, other.passed]),
            checks, {**self.info, **other.info}, self.note or other.note,
        )

    def summary(self) -> dict:
        worst = self.worst_pair()
        return {
            "kind": self.kind,
            "verdict": "pass" if self.verdict else "fail",
            "pairs": int(len(self.d_y)),
            "failed_pairs": int(np.sum(~self.passed)),
            "checks": {k: bool(v) for k, v in self.checks.items()},
            "worst_pair": list(worst) if worst else None,
            "info": _jsonable(self.info),
            "note": self.note,
        }

    def rows(self) -> list[dict]:
        return [
            {"i": int(a), "j": int(b), "d_x": float(x), "d_y": float(y),
             "lower": _num(lo), "upper": _num(hi), "pass": bool(ok)}
            for (a, b), x, y, lo, hi, ok in zip(self.pairs, self.d_x, self.d_y,
                                                self.lower, self.upper, self.passed)
        ]

    def to_dict(self) -> dict:
        return {**self.summary(), "rows": self.rows()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j", "d_x", "d_y", "lower", "upper", "lower_margin", "upper_margin", "pass"])
        for (a, b), x, y, lo, hi, ok in zip(self.pairs, self.d_x, self.d_y, self.lower, self.upper, self.passed):
            w.writerow([a, b, repr(float(x)), repr(float(y)), _num(lo), _num(hi),
                        _num(y - lo), _num(hi - y), int(ok)])
        return buf.getvalue()


def _num(v):
    v = float(v)
    return None if math.isnan(v) else (str(v) if math.isinf(v) else v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return _num(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def make_report(kind, i, j, d_x, d_y, lower, upper, slack=SLACK, relative=True, **kw) -> EmbeddingReport:
    d_x = np.asarray(d_x, dtype=float)
    lower = np.broadcast_to(np.asarray(lower, dtype=float), d_x.shape).copy()
    upper = np.broadcast_to(np.asarray(upper, dtype=float), d_x.shape).copy()
    passed = check_bounds(d_y, lower, upper, slack, relative)
    pairs = np.column_stack([np.asarray(i, dtype=int), np.asarray(j, dtype=int)]).reshape(-1, 2)
    return EmbeddingReport(kind, pairs, d_x, np.asarray(d_y, dtype=float), lower, upper, passed, **kw)


# ---------------------------------------------------------------------------
# moduli profiles


@dataclass(frozen=True)
class ModulusProfile:
    """Empirical compression/expansion moduli at the realized source distances."""

    t: np.ndarray
    rho: np.ndarray
    omega: np.ndarray

    def rho_at(self, s) -> np.ndarray:
        # inf over pairs with d_X >= s: the first realized distance >= s
        s = np.asarray(s, dtype=float)
        k = np.searchsorted(self.t, s, side="left")
        padded = np.append(self.rho, np.inf)
        return padded[k]

    def omega_at(self, s) -> np.ndarray:
        # sup over pairs with d_X <= s: the last realized distance <= s
        s = np.asarray(s, dtype=float)
        k = np.searchsorted(self.t, s, side="right") - 1
        padded = np.append(self.omega, 0.0)
        return padded[k]  # k = -1 picks the empty-sup value 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "rho_hat", "omega_hat"])
        for a, b, c in zip(self.t, self.rho, self.omega):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(c))])
        return buf.getvalue()


def measure_moduli(X: FiniteMetricSpace, image: FiniteMetricSpace,
                   pairing: Sequence[int] | None = None) -> ModulusProfile:
    _, _, dx, dy = _paired(X, image, pairing)
    order = np.argsort(dx, kind="stable")
    dx, dy = dx[order], dy[order]
    t, first = np.unique(dx, return_index=True)
    last = np.append(first[1:], len(dx)) - 1
    suffix_min = np.minimum.accumulate(dy[::-1])[::-1]
    prefix_max = np.maximum.accumulate(dy)
    return ModulusProfile(t, suffix_min[first], prefix_max[last])


# ---------------------------------------------------------------------------
# range, snowflake and compression-exponent checks


def range_check(X: FiniteMetricSpace, image: FiniteMetricSpace, pairing=None,
                interval: tuple[float, float] = (0.0, math.inf), r: float = 1.0, D: float = 1.0,
                slack: float = SLACK) -> EmbeddingReport:
    """r d_X <= d_Y <= D r d_X on exactly the pairs with d_X in the closed interval."""
    s1, s2 = map(float, interval)
    if not (0 < s1 <= s2):
        raise ValueError("range must satisfy 0 < s1 <= s2")
    if not (r > 0 and D >= 1):
        raise ValueError("need r > 0 and D >= 1")
    i, j, dx, dy = _paired(X, image, pairing)
    sel = (dx >= s1) & (dx <= s2)
    if not np.any(sel):
        raise ValueError(f"empty range: no pair has distance in [{s1:g}, {s2:g}]")
    isometric = r == 1 and D == 1
    rep = make_report("range", i[sel], j[sel], dx[sel], dy[sel], r * dx[sel], D * r * dx[sel],
                      slack=slack, relative=False,
                      info={"interval": [s1, s2], "r": r, "D": D, "isometric": isometric})
    return rep


def snowflake_check(X: FiniteMetricSpace, image: FiniteMetricSpace, pairing=None, s: float = 0.5,
                    slack: float = SLACK) -> EmbeddingReport:
    """d_Y <= max(d, d^s) per pair and rho_hat(t) >= min(t, t^s) at realized t."""
    if not (0 < s < 1):
        raise ValueError("snowflake exponent must lie in (0, 1)")
    i, j, dx, dy = _paired(X, image, pairing)
    lo, hi = np.minimum(dx, dx ** s), np.maximum(dx, dx ** s)
    # per-pair lower rows are equivalent to the profile clause since min(t, t^s) is non-decreasing
    rep = make_report("snowflake", i, j, dx, dy, lo, hi, slack=slack, relative=False)
    prof = measure_moduli(X, image, pairing)
    floor = np.minimum(prof.t, prof.t ** s)
    rep.checks["compression profile"] = bool(np.all(check_bounds(prof.rho, floor, np.nan, slack, False)))
    rep.info["s"] = s
    return rep


@dataclass(frozen=True)
class CompressionEstimate:
    alpha: float
    C: float
    threshold: float
    pairs_used: int
    note: str = ("certificate on the finite sample: (1/C) d^alpha <= d_Y <= C d on the pairs used; "
                 "not the supremum over all maps")


def compression_exponent_estimate(X: FiniteMetricSpace, image: FiniteMetricSpace, pairing=None,
                                  tau: float = 1.0) -> CompressionEstimate:
    """Witness (alpha, C) for (1/C) d_X^alpha <= d_Y <= C d_X above the threshold."""
    _, _, dx, dy = _paired(X, image, pairing)
    cut = max(float(tau), 1.0)
    sel = dx > cut
    if not np.any(sel):
        raise ValueError(f"no pair has distance above max(tau, 1) = {cut:g}")
    C = float(max(1.0, np.max(dy / dx)))
    with np.errstate(divide="ignore"):
        ratios = np.log(C * dy[sel]) / np.log(dx[sel])
    alpha = float(np.clip(np.min(ratios), 0.0, 1.0))
    return CompressionEstimate(alpha, C, cut, int(np.sum(sel)))
