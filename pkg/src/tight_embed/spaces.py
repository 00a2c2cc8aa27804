"""Finite metric spaces, coordinate l_p point sets, nets, and l_s-sums of l_p blocks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

TRIANGLE_SLACK = 1e-9


class MetricError(ValueError):
    def __init__(self, axiom: str, indices: tuple[int, ...], detail: str = ""):
        self.axiom = axiom
        self.indices = indices
        msg = f"{axiom} violated at {indices}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class ZeroNormError(ValueError):
    """Raised for the zero vector, which has no dyadic annulus (it is the basepoint)."""


def parse_exponent(p) -> float:
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "oo"):
            return math.inf
        p = float(p)
    p = float(p)
    if not (p >= 1):
        raise ValueError(f"exponent must lie in [1, inf], got {p}")
    return p


def exponent_to_json(p: float):
    return "inf" if math.isinf(p) else p


def lp_norm(x: np.ndarray, p: float, axis: int = -1) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[axis] == 0:
        shape = list(x.shape)
        del shape[axis]
        return np.zeros(shape)
    return np.linalg.norm(x, ord=p, axis=axis)


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    d: np.ndarray = field(repr=False)
    basepoint: int = 0

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return np.triu_indices(self.n, k=1)

    def pair_distances(self) -> np.ndarray:
        i, j = self.pairs()
        return self.d[i, j]

    def min_distance(self) -> float:
        return float(self.pair_distances().min()) if self.n > 1 else math.inf

    def diameter(self) -> float:
        return float(self.d.max()) if self.n else 0.0


def validate_metric(d, slack: float = TRIANGLE_SLACK, basepoint: int = 0) -> FiniteMetricSpace:
    """Return a validated space, or raise MetricError naming the axiom and indices."""
    d = np.array(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise MetricError("square matrix", (), f"shape {d.shape}")
    n = d.shape[0]
    if n == 0:
        raise MetricError("nonempty", ())
    if not np.all(np.isfinite(d)):
        i, j = np.argwhere(~np.isfinite(d))[0]
        raise MetricError("finite entries", (int(i), int(j)))
    if np.any(d < 0):
        i, j = np.argwhere(d < 0)[0]
        raise MetricError("nonnegativity", (int(i), int(j)), f"d={d[i, j]}")
    if np.any(np.diag(d) != 0):
        i = int(np.flatnonzero(np.diag(d) != 0)[0])
        raise MetricError("zero diagonal", (i, i), f"d={d[i, i]}")
    asym = d != d.T
    if np.any(asym):
        i, j = np.argwhere(asym)[0]
        raise MetricError("symmetry", (int(i), int(j)), f"{d[i, j]} != {d[j, i]}")
    off = ~np.eye(n, dtype=bool)
    if np.any(off & (d == 0)):
        i, j = np.argwhere(off & (d == 0))[0]
        raise MetricError("separation", (int(i), int(j)), "distinct points at distance 0")
    for k in range(n):
        via = d[:, [k]] + d[[k], :]
        bad = d > via + slack * np.maximum(1.0, d)
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise MetricError("triangle inequality", (int(i), int(j)),
                              f"{d[i, j]:g} > {d[i, k]:g} + {d[k, j]:g} via {k}")
    if not (0 <= basepoint < n):
        raise MetricError("basepoint index", (basepoint,))
    return FiniteMetricSpace(d, basepoint)


@dataclass(frozen=True, eq=False)
class LpPointSet:
    p: float
    points: np.ndarray = field(repr=False)
    basepoint: int | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array (count, dim)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "p", parse_exponent(self.p))
        if self.basepoint is not None:
            if not (0 <= self.basepoint < len(pts)):
                raise ValueError("basepoint index out of range")
            if np.any(pts[self.basepoint] != 0):
                raise ValueError("the basepoint must be the zero vector")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @cached_property
    def norms(self) -> np.ndarray:
        return lp_norm(self.points, self.p, axis=1)

    def distance_matrix(self) -> np.ndarray:
        n = self.n
        d = np.zeros((n, n))
        for i in range(n):
            d[i] = lp_norm(self.points - self.points[i], self.p, axis=1)
        return np.maximum(d, d.T)

    def metric(self) -> FiniteMetricSpace:
        return validate_metric(self.distance_matrix(), basepoint=self.basepoint or 0)

    def scaled(self, c: float) -> "LpPointSet":
        return LpPointSet(self.p, self.points * c, self.basepoint)


def dyadic_annulus_index(norm: float) -> int:
    """The unique k with 2**k <= norm < 2**(k+1)."""
    norm = float(norm)
    if norm == 0:
        raise ZeroNormError("zero vector: basepoint, mapped to 0")
    if not (norm > 0 and math.isfinite(norm)):
        raise ValueError(f"norm must be positive and finite, got {norm}")
    _, e = math.frexp(norm)  # norm = m * 2**e with 0.5 <= m < 1
    return e - 1


def ball_members(M: LpPointSet, k: int) -> np.ndarray:
    """Indices of points of M with norm <= 2**(k+1)."""
    return np.flatnonzero(M.norms <= math.ldexp(1.0, k + 1))


def epsilon_net(X: FiniteMetricSpace, delta: float) -> np.ndarray:
    """Greedy delta-net in index order.

    A point joins the net when it is more than ``delta`` from every net
    point chosen so far, so the result is delta-covering and
    delta-separated (strictly).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    net: list[int] = []
    gap = np.full(X.n, np.inf)
    for i in range(X.n):
        if gap[i] > delta:
            net.append(i)
            gap = np.minimum(gap, X.d[i])
    return np.array(net, dtype=int)


def nearest_net_map(X: FiniteMetricSpace, R: Sequence[int]) -> np.ndarray:
    """Map every point to a nearest net point; ties go to the lowest index."""
    R = np.sort(np.asarray(R, dtype=int))
    if R.size == 0:
        raise ValueError("net must be nonempty")
    return R[np.argmin(X.d[:, R], axis=1)]


def kalton_compact_sample(p, N: int, a: Sequence[float], count: int, seed: int) -> LpPointSet:
    """Sample the compact set S(B_X), S(x) = sum_n a_n x_n e_n, in l_p^N.

    Output order: the origin (basepoint), the corners +-a_n e_n, then
    ``count`` images of random points of the unit ball.
    """
    p = parse_exponent(p)
    a = np.asarray(a, dtype=float)
    if a.shape != (N,):
        raise ValueError(f"need exactly N={N} weights, got {a.shape}")
    if np.any(a <= 0) or np.any(np.diff(a) >= 0):
        raise ValueError("weights must be positive and strictly decreasing")
    if a.sum() > 1 + 1e-12:
        raise ValueError(f"weights sum to {a.sum():g} > 1")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, N))
    g /= np.maximum(lp_norm(g, p, axis=1), 1e-300)[:, None]
    radius = rng.random(count) ** (1.0 / N)
    t = g * radius[:, None]
    corners = np.zeros((2 * N, N))
    for n in range(N):
        corners[2 * n, n] = a[n]
        corners[2 * n + 1, n] = -a[n]
    pts = np.vstack([np.zeros((1, N)), corners, t * a])
    return LpPointSet(p, pts, basepoint=0)


def geometric_weights(N: int, ratio: float = 4.0) -> np.ndarray:
    return ratio ** -np.arange(1, N + 1, dtype=float)


def random_points(n: int, dim: int, p, seed: int, rmin: float = 0.125, rmax: float = 32.0,
                  include_origin: bool = True) -> LpPointSet:
    """Random directions with log-uniform norms in [rmin, rmax], origin first."""
    p = parse_exponent(p)
    rng = np.random.default_rng(seed)
    m = n - 1 if include_origin else n
    g = rng.standard_normal((m, dim))
    g /= lp_norm(g, p, axis=1)[:, None]
    radii = np.exp(rng.uniform(math.log(rmin), math.log(rmax), m))
    pts = g * radii[:, None]
    if include_origin:
        pts = np.vstack([np.zeros((1, dim)), pts])
    return LpPointSet(p, pts, basepoint=0 if include_origin else None)


def repair_triangle(w: np.ndarray) -> np.ndarray:
    """Shortest-path closure of a symmetric positive weight matrix."""
    d = np.array(w, dtype=float)
    np.fill_diagonal(d, 0.0)
    for k in range(d.shape[0]):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return np.minimum(d, d.T)


def random_metric(n: int, seed: int, lo: float = 0.05, hi: float = 20.0) -> FiniteMetricSpace:
    """Log-uniform symmetric weights on [lo, hi], triangle-repaired."""
    rng = np.random.default_rng(seed)
    w = np.exp(rng.uniform(math.log(lo), math.log(hi), (n, n)))
    w = np.triu(w, 1)
    w = w + w.T
    return validate_metric(repair_triangle(w))


# ---------------------------------------------------------------------------
# l_s-sums of l_p blocks


@dataclass(frozen=True)
class BlockSpace:
    s: float
    blocks: tuple[tuple[float, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "s", parse_exponent(self.s))
        object.__setattr__(self, "blocks", tuple((parse_exponent(p), int(d)) for p, d in self.blocks))
        if any(d < 0 for _, d in self.blocks):
            raise ValueError("block dimensions must be nonnegative")

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([d for _, d in self.blocks])]).astype(int)

    @property
    def dim(self) -> int:
        return int(self.offsets[-1])

    def check_index(self, j: int):
        if not (0 <= j < len(self.blocks)):
            raise KeyError(f"unknown block index {j}")

    def dense(self, v: "BlockVector") -> np.ndarray:
        out = np.zeros(self.dim)
        for j, x in v.parts.items():
            out[self.offsets[j]:self.offsets[j + 1]] = x
        return out

    def vector(self, row: np.ndarray) -> "BlockVector":
        parts = {}
        for j in range(len(self.blocks)):
            x = row[self.offsets[j]:self.offsets[j + 1]]
            if x.size and np.any(x != 0):
                parts[j] = x.copy()
        return BlockVector(self, parts)

    def block_norms(self, rows: np.ndarray) -> np.ndarray:
        """Per-block l_p norms for a stack of dense rows, shape (m, blocks)."""
        rows = np.atleast_2d(rows)
        out = np.zeros((rows.shape[0], len(self.blocks)))
        for j, (p, d) in enumerate(self.blocks):
            if d:
                out[:, j] = lp_norm(rows[:, self.offsets[j]:self.offsets[j + 1]], p, axis=1)
        return out

    def norms(self, rows: np.ndarray) -> np.ndarray:
        bn = self.block_norms(rows)
        if bn.shape[1] == 0:
            return np.zeros(bn.shape[0])
        return lp_norm(bn, self.s, axis=1)

    def to_spec(self) -> dict:
        return {"s": exponent_to_json(self.s),
                "blocks": [[exponent_to_json(p), d] for p, d in self.blocks]}

    @classmethod
    def from_spec(cls, spec: dict) -> "BlockSpace":
        return cls(spec["s"], tuple((p, d) for p, d in spec["blocks"]))


@dataclass(frozen=True, eq=False)
class BlockVector:
    space: BlockSpace
    parts: dict[int, np.ndarray]

    def __post_init__(self):
        for j, x in self.parts.items():
            self.space.check_index(j)
            if np.shape(x) != (self.space.blocks[j][1],):
                raise ValueError(f"block {j} has dimension {self.space.blocks[j][1]}, got {np.shape(x)}")

    def _combine(self, other: "BlockVector", sign: float) -> "BlockVector":
        if other.space != self.space:
            raise ValueError("vectors live in different block spaces")
        parts = {j: x.copy() for j, x in self.parts.items()}
        for j, x in other.parts.items():
            parts[j] = parts[j] + sign * x if j in parts else sign * x
        return BlockVector(self.space, parts)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, c: float):
        return BlockVector(self.space, {j: c * x for j, x in self.parts.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def block_norm(space: BlockSpace, v: BlockVector) -> float:
    if v.space != space:
        raise ValueError("vector does not belong to this block space")
    return float(space.norms(space.dense(v))[0])


def block_project(v: BlockVector, J: Iterable[int]) -> BlockVector:
    """Keep the blocks in J, zero the rest (a norm-one idempotent)."""
    J = set(int(j) for j in J)
    for j in J:
        v.space.check_index(j)
    return BlockVector(v.space, {j: x.copy() for j, x in v.parts.items() if j in J})
