"""Nearly isometric embedding of a finite metric space on Kalton's coordinates.

For a basepoint 0 and every ordered pair p != q,

    g_{p,q}(x) = max(d(p,q) - d(q,x), 0) - max(d(p,q) - d(q,0), 0)
    h_{p,q}    = rho(d(p,q)) / d(p,q) * g_{p,q}

and x is sent to the row (h_{p,q}(x))_{p != q} of l_infinity.  With
regularized moduli every h_{p,q} has N_omega <= 1, which gives the
upper bound omega(d); the coordinate (x, y) attains the lower bound rho(d).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import chunked_map
from .moduli import ModulusCurve, Tail, check_class, is_regular, regularize_omega, regularize_rho
from .spaces import FiniteMetricSpace
from .verify import EmbeddingReport, make_report

SLACK = 1e-9


class RegularityError(ValueError):
    pass


@dataclass(frozen=True)
class KaltonCoordinate:
    p: int
    q: int
    weight: float


def _check_pair(M: FiniteMetricSpace, p: int, q: int):
    if p == q:
        raise ValueError("Kalton coordinates need p != q")
    for i in (p, q):
        if not (0 <= i < M.n):
            raise IndexError(f"point index {i} out of range")


def g_pq(M: FiniteMetricSpace, basepoint: int, p: int, q: int, x):
    _check_pair(M, p, q)
    d = M.d
    dpq = d[p, q]
    return np.maximum(dpq - d[q, x], 0.0) - max(dpq - d[q, basepoint], 0.0)


def h_pq(M: FiniteMetricSpace, rho: ModulusCurve, p: int, q: int, x, basepoint: int | None = None):
    check_class(rho, "P", extra=[M.d[p, q]]).raise_if_failed()
    basepoint = M.basepoint if basepoint is None else basepoint
    dpq = M.d[p, q]
    return rho(dpq) / dpq * g_pq(M, basepoint, p, q, x)


def coordinate_pairs(n: int) -> np.ndarray:
    """All ordered pairs (p, q) with p != q, in row-major order."""
    p, q = np.nonzero(~np.eye(n, dtype=bool))
    return np.column_stack([p, q])


def g_table(M: FiniteMetricSpace, basepoint: int, coords: np.ndarray) -> np.ndarray:
    d = M.d
    p, q = coords[:, 0], coords[:, 1]
    dpq = d[p, q]
    const = np.maximum(dpq - d[q, basepoint], 0.0)
    return np.maximum(dpq[:, None] - d[q, :], 0.0) - const[:, None]


def pair_sweep(table: np.ndarray, M: FiniteMetricSpace, omega: ModulusCurve,
               chunk: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """One pass over all unordered pairs of the table's columns.

    Returns the sup-norm distance of every pair (in ``M.pairs()`` order)
    and N_omega of every row.
    """
    H = np.ascontiguousarray(np.atleast_2d(table).T)  # points x coordinates
    i, j = M.pairs()
    if len(i) == 0 or H.shape[1] == 0:
        return np.zeros(len(i)), np.zeros(H.shape[1])
    inv_w = 1.0 / omega(M.d[i, j])

    def block(a, b):
        diff = np.abs(H[i[a:b]] - H[j[a:b]])
        return diff.max(axis=1), (diff * inv_w[a:b, None]).max(axis=0)

    parts = chunked_map(block, len(i), chunk)
    dist = np.concatenate([p[0] for p in parts])
    norms = np.max(np.stack([p[1] for p in parts]), axis=0)
    return dist, norms


def n_omega(values: np.ndarray, M: FiniteMetricSpace, omega: ModulusCurve) -> np.ndarray:
    """Exact N_omega of each row of ``values`` (a single table row gives a scalar)."""
    _, norms = pair_sweep(values, M, omega)
    return float(norms[0]) if np.ndim(values) == 1 else norms


def _certification_grid(M: FiniteMetricSpace) -> np.ndarray:
    return np.concatenate([np.geomspace(1e-6, 1e6, 2001), M.pair_distances()])


def check_hypotheses(M: FiniteMetricSpace, rho: ModulusCurve, omega: ModulusCurve) -> None:
    dists = M.pair_distances()
    check_class(rho, "P", extra=dists).raise_if_failed()
    check_class(omega, "Omega", extra=dists).raise_if_failed()
    grid = _certification_grid(M)
    for name, curve, fix in (("rho", rho, "regularize_rho"), ("omega", omega, "regularize_omega")):
        ok, why = is_regular(curve, grid)
        if not ok:
            raise RegularityError(f"{name} is not regularized ({why}); apply {fix} first")


def regularize_for(M: FiniteMetricSpace, rho: ModulusCurve, omega: ModulusCurve):
    """Regularize both moduli with the realized distances of M on the grid."""
    dists = M.pair_distances()
    return regularize_rho(rho, extra=dists), regularize_omega(omega, extra=dists)


@dataclass(frozen=True, eq=False)
class StableEmbedding:
    base: FiniteMetricSpace
    basepoint: int
    rho: ModulusCurve
    omega: ModulusCurve
    coords: np.ndarray = field(repr=False)   # (m, 2) ordered pairs
    weights: np.ndarray = field(repr=False)  # rho(d(p,q)) / d(p,q)
    table: np.ndarray = field(repr=False)    # (m, n): h_{p,q}(x)

    def coordinates(self) -> list[KaltonCoordinate]:
        return [KaltonCoordinate(int(p), int(q), float(w)) for (p, q), w in zip(self.coords, self.weights)]

    def distance(self, x: int, y: int) -> float:
        return float(np.max(np.abs(self.table[:, x] - self.table[:, y]))) if len(self.table) else 0.0

    def distance_matrix(self) -> np.ndarray:
        n = self.base.n
        dist, _ = pair_sweep(self.table, self.base, self.omega)
        D = np.zeros((n, n))
        i, j = self.base.pairs()
        D[i, j] = dist
        return D + D.T

    def to_dict(self, report: EmbeddingReport | None = None) -> dict:
        out = {
            "type": "stable_embedding",
            "basepoint": self.basepoint,
            "metric": self.base.d.tolist(),
            "rho": self.rho.to_spec(),
            "omega": self.omega.to_spec(),
            "coordinates": [[int(p), int(q), float(w)] for (p, q), w in zip(self.coords, self.weights)],
            "table": self.table.tolist(),
        }
        if report is not None:
            out["report"] = report.summary()
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "StableEmbedding":
        from .spaces import validate_metric

        if obj.get("type") != "stable_embedding":
            raise ValueError("not a stable_embedding document")
        bp = int(obj["basepoint"])
        M = validate_metric(obj["metric"], basepoint=bp)
        coords = np.array([[c[0], c[1]] for c in obj["coordinates"]], dtype=int).reshape(-1, 2)
        weights = np.array([c[2] for c in obj["coordinates"]], dtype=float)
        table = np.asarray(obj["table"], dtype=float).reshape(len(coords), M.n)
        return cls(M, bp, ModulusCurve.from_spec(obj["rho"]), ModulusCurve.from_spec(obj["omega"]),
                   coords, weights, table)


def embed_stable(M: FiniteMetricSpace, basepoint: int | None, rho: ModulusCurve, omega: ModulusCurve,
                 check: bool = True) -> StableEmbedding:
    basepoint = M.basepoint if basepoint is None else int(basepoint)
    if not (0 <= basepoint < M.n):
        raise ValueError("basepoint index out of range")
    if check:
        check_hypotheses(M, rho, omega)
    coords = coordinate_pairs(M.n)
    if len(coords):
        dpq = M.d[coords[:, 0], coords[:, 1]]
        weights = rho(dpq) / dpq
        table = weights[:, None] * g_table(M, basepoint, coords)
    else:
        weights = np.zeros(0)
        table = np.zeros((0, M.n))
    return StableEmbedding(M, basepoint, rho, omega, coords, weights, table)


@dataclass(frozen=True)
class RatioBound:
    value: float
    bounds: dict  # case label -> dominating bound

    @property
    def holds(self) -> bool:
        return all(self.value <= b * (1 + SLACK) + SLACK for b in self.bounds.values())


def ratio_R(M: FiniteMetricSpace, rho: ModulusCurve, omega: ModulusCurve, p: int, q: int, x: int, y: int,
            basepoint: int | None = None) -> RatioBound:
    """R_{p,q}(x,y) = |h_{p,q}(x) - h_{p,q}(y)| / omega(d(x,y)) with its finite-scale bounds."""
    _check_pair(M, p, q)
    if x == y:
        raise ValueError("ratio needs x != y")
    basepoint = M.basepoint if basepoint is None else basepoint
    dpq, dxy = M.d[p, q], M.d[x, y]
    w = rho(dpq) / dpq
    g = g_pq(M, basepoint, p, q, np.array([x, y]))
    value = float(w * abs(g[0] - g[1]) / omega(dxy))
    bounds = {"coordinate weight": float(w)}
    if dpq <= 1:
        bounds["short coordinate"] = float(dpq / omega(dpq))
    if dxy > 1:
        bounds["long separation"] = float(rho(dxy) / dxy)
    else:
        bounds["short separation"] = float(dxy / omega(dxy))
    return RatioBound(value, bounds)


def ratio_bound_violations(emb: StableEmbedding, chunk: int = 256) -> dict:
    """Worst excess of R over each dominating bound, over all (p,q), (x,y) tuples."""
    M = emb.base
    i, j = M.pairs()
    dxy = M.d[i, j]
    om = emb.omega(dxy)
    dpq = M.d[emb.coords[:, 0], emb.coords[:, 1]]
    b_ia = emb.weights
    b_ib = np.where(dpq <= 1, dpq / emb.omega(dpq), np.inf)
    b_ii = np.where(dxy > 1, emb.rho(dxy) / dxy, dxy / om)

    def block(a, b):
        R = np.abs(emb.table[a:b, i] - emb.table[a:b, j]) / om
        return (np.max(R - b_ia[a:b, None]), np.max(R - b_ib[a:b, None]), np.max(R - b_ii[None, :]),
                np.max(R))

    parts = chunked_map(block, len(emb.table), chunk)
    if not parts:
        return {"coordinate weight": -math.inf, "short coordinate": -math.inf, "separation": -math.inf, "max R": 0.0}
    worst = np.max(np.array(parts), axis=0)
    return {"coordinate weight": worst[0], "short coordinate": worst[1], "separation": worst[2], "max R": worst[3]}


def coordinate_bound_excess(M: FiniteMetricSpace, basepoint: int, chunk: int = 256) -> float:
    """max over tuples of |g_pq(x) - g_pq(y)| - min(d(p,q), d(x,y)); <= 0 when the bound holds."""
    coords = coordinate_pairs(M.n)
    if len(coords) == 0 or M.n < 2:
        return -math.inf
    G = g_table(M, basepoint, coords)
    i, j = M.pairs()
    dxy = M.d[i, j]
    dpq = M.d[coords[:, 0], coords[:, 1]]

    def block(a, b):
        diff = np.abs(G[a:b, i] - G[a:b, j])
        return float(np.max(diff - np.minimum(dpq[a:b, None], dxy[None, :])))

    return max(chunked_map(block, len(coords), chunk))


def verify_stable(emb: StableEmbedding, slack: float = SLACK) -> EmbeddingReport:
    """rho(d) <= sup-coordinate distance <= omega(d) on every pair, attainment, and N_omega <= 1."""
    M = emb.base
    i, j = M.pairs()
    d = M.d[i, j]
    D, norms = pair_sweep(emb.table, M, emb.omega)
    lo, hi = emb.rho(d), emb.omega(d)
    rep = make_report("stable_sandwich", i, j, d, D, lo, hi, slack=slack, relative=True)

    # coordinate (x, y) sits at row x * (n - 1) + (y if y < x else y - 1)
    n = M.n
    row_xy = i * (n - 1) + (j - 1)
    attained = np.abs(emb.table[row_xy, i] - emb.table[row_xy, j])
    att_ok = np.abs(attained - lo) <= slack * np.maximum(1.0, lo)
    rep.passed &= att_ok
    rep.checks.update({
        "lower: rho(d)": bool(np.all(D >= lo * (1 - slack))),
        "upper: omega(d)": bool(np.all(D <= hi * (1 + slack))),
        "lower attained at coordinate (x,y)": bool(np.all(att_ok)),
        "N_omega(h_pq) <= 1": bool(np.all(norms <= 1 + slack)),
    })
    rep.info.update({
        "coordinates": int(len(emb.table)),
        "max_N_omega": float(norms.max()) if len(norms) else 0.0,
        "max_attainment_error": float(np.max(np.abs(attained - lo))) if len(lo) else 0.0,
        "basepoint": emb.basepoint,
    })
    return rep


def isometric_range_moduli(s1: float, s2: float, alpha: float = 0.5) -> tuple[ModulusCurve, ModulusCurve]:
    """(rho, omega) in P x Omega, both regular, with rho(t) = omega(t) = t on [s1, s2].

    Requires s1 <= 1 <= s2 (outside that window any member of the
    classes already equals t on the relevant side).
    """
    if not (0 < s1 <= 1 <= s2):
        raise ValueError("need 0 < s1 <= 1 <= s2")
    if not (0 < alpha < 1):
        raise ValueError("alpha must lie in (0, 1)")
    rho = ModulusCurve.piecewise_linear([(0.0, 0.0), (s2, s2)], tail=Tail("power", alpha))
    omega = ModulusCurve.piecewise_linear([(s1, s1), (2.0, 2.0)], tail=Tail("affine", 1.0),
                                          head=Tail("power", alpha))
    return rho, omega
