"""Modulus functions on [0, inf): evaluation, class membership, domination, regularization.

Curves are immutable descriptors. Closed-form families are evaluated
directly; piecewise-linear curves carry analytic head and tail laws so
that limit clauses can be certified without sampling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Sequence

import numpy as np

SLACK = 1e-9
BISECT_TOL = 1e-12
GRID_LO = 1e-6
GRID_HI = 1e6

CLASSES = ("Phi", "P", "Omega")
_MONOTONE = ("power_rho", "power_omega", "exp_floor", "saturating")


class ClassViolation(ValueError):
    """A curve fails a clause of the class it was required to belong to."""

    def __init__(self, cls: str, clause: str, t: float):
        self.cls = cls
        self.clause = clause
        self.t = t
        super().__init__(f"curve is not in {cls}: clause {clause!r} fails at t={t:g}")


@dataclass(frozen=True)
class Tail:
    """Extension law outside the breakpoints of a piecewise-linear curve.

    ``power``: v * (t / t_ref) ** value.  ``affine``: v + value * (t - t_ref).
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("power", "affine"):
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if not math.isfinite(self.value):
            raise ValueError("tail parameter must be finite")

    def to_spec(self) -> dict:
        key = "alpha" if self.kind == "power" else "slope"
        return {"kind": self.kind, key: self.value}

    @classmethod
    def from_spec(cls, spec: dict) -> "Tail":
        kind = spec["kind"]
        if kind == "power":
            return cls("power", float(spec["alpha"]))
        if kind == "affine":
            return cls("affine", float(spec["slope"]))
        raise ValueError(f"unknown tail kind {kind!r}")


@dataclass(frozen=True)
class ModulusCurve:
    family: str
    alpha: float | None = None
    points: tuple[tuple[float, float], ...] = ()
    tail: Tail | None = None
    head: Tail | None = None
    base: "ModulusCurve | None" = None
    floor: bool = True

    def __post_init__(self):
        fam = self.family
        if fam in ("power_rho", "power_omega"):
            if self.alpha is None or not (0 < self.alpha <= 1):
                raise ValueError(f"{fam} needs an exponent in (0, 1], got {self.alpha}")
        elif fam == "pl":
            self._validate_pl()
        elif fam in ("log2_dominated", "conjugate"):
            if self.base is None:
                raise ValueError(f"{fam} needs a base curve")
        elif fam not in ("exp_floor", "saturating"):
            raise ValueError(f"unknown curve family {fam!r}")

    def _validate_pl(self):
        if not self.points:
            raise ValueError("piecewise-linear curve needs at least one breakpoint")
        t = np.array([p[0] for p in self.points], dtype=float)
        v = np.array([p[1] for p in self.points], dtype=float)
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("breakpoints must be finite")
        if t[0] < 0:
            raise ValueError("breakpoints must be nonnegative")
        if np.any(np.diff(t) <= 0):
            raise ValueError("breakpoints must be strictly increasing in t")
        if self.tail is not None and self.tail.kind == "power" and t[-1] <= 0:
            raise ValueError("a power tail needs a positive last breakpoint")
        if self.head is not None:
            if self.head.kind != "power" or self.head.value <= 0:
                raise ValueError("head must be a power law with positive exponent")

    # -- constructors -------------------------------------------------------

    @classmethod
    def power_rho(cls, alpha: float) -> "ModulusCurve":
        return cls("power_rho", alpha=float(alpha))

    @classmethod
    def power_omega(cls, alpha: float) -> "ModulusCurve":
        return cls("power_omega", alpha=float(alpha))

    @classmethod
    def exp_floor(cls) -> "ModulusCurve":
        return cls("exp_floor")

    @classmethod
    def saturating(cls) -> "ModulusCurve":
        return cls("saturating")

    @classmethod
    def piecewise_linear(cls, points, tail: Tail | None = None,
                         head: Tail | None = None) -> "ModulusCurve":
        pts = tuple((float(a), float(b)) for a, b in points)
        return cls("pl", points=pts, tail=tail, head=head)

    @classmethod
    def log2_dominated(cls, base: "ModulusCurve", floor: bool = True) -> "ModulusCurve":
        return cls("log2_dominated", base=base, floor=floor)

    @classmethod
    def conjugate(cls, base: "ModulusCurve") -> "ModulusCurve":
        """t -> 1 / base(1 / t): swaps behaviour at 0 and at infinity."""
        return cls("conjugate", base=base)

    # -- evaluation ---------------------------------------------------------

    @cached_property
    def _t(self) -> np.ndarray:
        return np.array([p[0] for p in self.points], dtype=float)

    @cached_property
    def _v(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=float)

    @cached_property
    def _prefix_max(self) -> np.ndarray:
        return np.maximum.accumulate(self._v)

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        if np.any(np.isnan(arr)) or np.any(arr < 0):
            raise ValueError("modulus curves are evaluated at t >= 0 only")
        out = self._eval(np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def _eval(self, t: np.ndarray) -> np.ndarray:
        fam = self.family
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if fam == "power_rho":
                return np.minimum(t, t ** self.alpha)
            if fam == "power_omega":
                return np.maximum(t, t ** self.alpha)
            if fam == "exp_floor":
                return -np.expm1(-t)
            if fam == "saturating":
                return np.where(np.isinf(t), 1.0, t / (1.0 + t))
            if fam == "pl":
                return self._eval_pl(t)
            if fam == "log2_dominated":
                lam = self.base.running_max(t)
                if self.floor:
                    lam = np.maximum(lam, -np.expm1(-t))
                return np.log2(lam)
            # conjugate
            out = np.zeros_like(t)
            pos = t > 0
            out[pos] = 1.0 / self.base._eval(1.0 / t[pos])
            return out

    def _eval_pl(self, t: np.ndarray) -> np.ndarray:
        ts, vs = self._t, self._v
        out = np.interp(t, ts, vs)
        lo = t < ts[0]
        if np.any(lo):
            alpha = 1.0 if self.head is None else self.head.value
            out[lo] = vs[0] * (t[lo] / ts[0]) ** alpha
        hi = t > ts[-1]
        if np.any(hi):
            tail = self.tail or Tail("affine", 0.0)
            if tail.kind == "power":
                out[hi] = vs[-1] * (t[hi] / ts[-1]) ** tail.value
            else:
                out[hi] = vs[-1] + tail.value * (t[hi] - ts[-1])
        return out

    def running_max(self, t) -> np.ndarray:
        """sup of the curve over (0, t], exact for every family that supports it."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.family in _MONOTONE:
            return self._eval(t)
        if self.family != "pl":
            raise ValueError(f"running maximum is not available for family {self.family!r}")
        vals = self._eval_pl(t)
        idx = np.searchsorted(self._t, t, side="right") - 1
        known = idx >= 0
        out = vals.copy()
        out[known] = np.maximum(vals[known], self._prefix_max[idx[known]])
        return out

    def breakpoints(self) -> np.ndarray:
        if self.family == "pl":
            return self._t.copy()
        if self.family == "log2_dominated":
            return self.base.breakpoints()
        if self.family == "conjugate":
            b = self.base.breakpoints()
            b = b[b > 0]
            return np.sort(1.0 / b)
        return np.empty(0)

    # -- analytic asymptotics -----------------------------------------------

    def head_law(self) -> tuple[float, float]:
        """(c, e) with curve(t) ~ c * t**e as t -> 0+."""
        fam = self.family
        if fam == "power_omega":
            return 1.0, self.alpha
        if fam in ("power_rho", "exp_floor", "saturating"):
            return 1.0, 1.0
        if fam == "pl":
            ts, vs = self._t, self._v
            if ts[0] > 0:
                alpha = 1.0 if self.head is None else self.head.value
                return vs[0] / ts[0] ** alpha, alpha
            if vs[0] != 0 or len(ts) == 1:
                return vs[0], 0.0
            return (vs[1] - vs[0]) / (ts[1] - ts[0]), 1.0
        if fam == "conjugate":
            c, e = self.base.tail_law()
            return (math.inf if c == 0 else 1.0 / c), e
        raise ValueError(f"no head law for family {fam!r}")

    def tail_law(self) -> tuple[float, float]:
        """(c, e) with curve(t) ~ c * t**e as t -> infinity."""
        fam = self.family
        if fam == "power_rho":
            return 1.0, self.alpha
        if fam == "power_omega":
            return 1.0, 1.0
        if fam in ("exp_floor", "saturating"):
            return 1.0, 0.0
        if fam == "pl":
            ts, vs = self._t, self._v
            tail = self.tail or Tail("affine", 0.0)
            if tail.kind == "power":
                return vs[-1] / ts[-1] ** tail.value, tail.value
            if tail.value != 0:
                return tail.value, 1.0
            return vs[-1], 0.0
        if fam == "conjugate":
            c, e = self.base.head_law()
            return (math.inf if c == 0 else 1.0 / c), e
        raise ValueError(f"no tail law for family {fam!r}")

    def ratio_limit_at_infinity(self) -> float:
        c, e = self.tail_law()
        if c == 0 or e < 1:
            return 0.0
        return c if e == 1 else math.copysign(math.inf, c)

    def ratio_limit_at_zero(self) -> float:
        c, e = self.head_law()
        if c == 0 or e > 1:
            return 0.0
        return c if e == 1 else math.copysign(math.inf, c)

    def _phi_tail_ok(self) -> bool:
        # values must stay inside (0, 1) beyond any finite grid
        fam = self.family
        if fam in ("exp_floor", "saturating"):
            return True
        if fam == "pl":
            tail = self.tail or Tail("affine", 0.0)
            v = self._v[-1]
            if tail.kind == "affine":
                return tail.value == 0 and 0 < v < 1
            return tail.value <= 0 and 0 < v < 1
        if fam == "conjugate":
            c, e = self.tail_law()
            return e < 0 and c > 0
        return False

    def _log_gap_to_one(self, t: np.ndarray) -> np.ndarray:
        """log(1 - curve(t)), computed where the gap is representable."""
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.family == "exp_floor":
                return -t
            if self.family == "saturating":
                return -np.log1p(t)
            return np.log1p(-self._eval(t))

    # -- serialization ------------------------------------------------------

    def to_spec(self) -> dict:
        fam = self.family
        if fam in ("power_rho", "power_omega"):
            return {"family": fam, "alpha": self.alpha}
        if fam in ("exp_floor", "saturating"):
            return {"family": fam}
        if fam == "pl":
            spec: dict[str, Any] = {"family": "pl", "points": [list(p) for p in self.points]}
            spec["tail"] = (self.tail or Tail("affine", 0.0)).to_spec()
            if self.head is not None:
                spec["head"] = self.head.to_spec()
            return spec
        if fam == "log2_dominated":
            return {"family": fam, "base": self.base.to_spec(), "floor": self.floor}
        return {"family": fam, "base": self.base.to_spec()}

    @classmethod
    def from_spec(cls, spec: dict) -> "ModulusCurve":
        if not isinstance(spec, dict) or "family" not in spec:
            raise ValueError("modulus spec must be an object with a 'family' key")
        fam = spec["family"]
        if fam in ("power_rho", "power_omega"):
            return cls(fam, alpha=float(spec["alpha"]))
        if fam in ("exp_floor", "saturating"):
            return cls(fam)
        if fam in ("pl", "piecewise_linear"):
            tail = Tail.from_spec(spec["tail"]) if "tail" in spec else None
            head = Tail.from_spec(spec["head"]) if "head" in spec else None
            return cls.piecewise_linear(spec["points"], tail=tail, head=head)
        if fam == "log2_dominated":
            return cls.log2_dominated(cls.from_spec(spec["base"]), bool(spec.get("floor", True)))
        if fam == "conjugate":
            return cls.conjugate(cls.from_spec(spec["base"]))
        raise ValueError(f"unknown curve family {fam!r}")


def evaluate(curve: ModulusCurve, t):
    return curve(t)


# ---------------------------------------------------------------------------
# grids and class certification


def geometric_grid(count: int = 2001, lo: float = GRID_LO, hi: float = GRID_HI) -> np.ndarray:
    if count < 2:
        raise ValueError("grid density must be at least 2")
    return np.geomspace(lo, hi, count)


def symmetric_grid(count: int = 2401, hi: float = GRID_HI) -> np.ndarray:
    """Geometric grid on [1/hi, hi] that is closed under t -> 1/t and contains 1."""
    half = np.geomspace(1.0, hi, max(2, (count + 1) // 2))
    return np.concatenate([1.0 / half[:0:-1], half])


def certification_grid(curve: ModulusCurve, density: int = 2001, extra: Sequence[float] = ()) -> np.ndarray:
    parts = [geometric_grid(density), [0.0, 1.0], curve.breakpoints(), np.asarray(extra, dtype=float).ravel()]
    grid = np.unique(np.concatenate([np.asarray(p, dtype=float) for p in parts]))
    return grid[np.isfinite(grid) & (grid >= 0)]


def _tol(v) -> np.ndarray:
    return SLACK * np.maximum(1.0, np.abs(v))


@dataclass(frozen=True)
class ClassReport:
    cls: str
    grid: np.ndarray = field(repr=False)
    verdict: bool
    first_violation: tuple[float, str] | None
    failed: tuple[str, ...] = ()

    def raise_if_failed(self):
        if not self.verdict:
            t, clause = self.first_violation
            raise ClassViolation(self.cls, clause, t)


def _pointwise(cls: str, curve: ModulusCurve, t: np.ndarray, v: np.ndarray):
    at0 = t == 0
    pos = t > 0
    unit = t <= 1
    big = t >= 1
    if cls == "Phi":
        gap = curve._log_gap_to_one(t)
        return [
            ("phi(0)=0", ~at0 | (np.abs(v) <= _tol(0.0))),
            ("phi(t)>=0", v >= 0),
            ("phi(t)>0 for t>0", ~pos | (v > 0)),
            ("phi(t)<1", np.isfinite(gap)),
        ]
    if cls == "P":
        return [
            ("rho(t)>=0", v >= -_tol(v)),
            ("rho(t)=t on [0,1]", ~unit | (np.abs(v - t) <= _tol(t))),
            ("rho(t)<=t for t>=1", ~big | (v <= t + _tol(t))),
        ]
    return [
        ("omega(0)=0", ~at0 | (np.abs(v) <= _tol(0.0))),
        ("t<=omega(t) on [0,1]", ~unit | (v >= t - _tol(t))),
        ("omega(t)=t for t>=1", ~big | (np.abs(v - t) <= _tol(t))),
    ]


def _analytic(cls: str, curve: ModulusCurve):
    if cls == "Phi":
        return [("tail stays in (0,1)", math.inf, curve._phi_tail_ok())]
    if cls == "P":
        return [("lim rho(t)/t = 0", math.inf, curve.ratio_limit_at_infinity() == 0)]
    return [("lim omega(t)/t = inf at 0", 0.0, curve.ratio_limit_at_zero() == math.inf)]


def check_class(curve: ModulusCurve, cls: str, density: int = 2001, extra: Sequence[float] = ()) -> ClassReport:
    """Certify membership of ``curve`` in Phi, P or Omega.

    Pointwise clauses are checked on a geometric grid over [1e-6, 1e6]
    (plus 0, 1, the curve's breakpoints and ``extra``); limit clauses
    come from the family's analytic head/tail law.
    """
    if cls not in CLASSES:
        raise ValueError(f"unknown class tag {cls!r}; expected one of {CLASSES}")
    if density < 2:
        raise ValueError("grid density must be at least 2")
    grid = certification_grid(curve, density, extra)
    try:
        values = curve(grid)
        analytic = _analytic(cls, curve)
    except ValueError as exc:  # e.g. log2-type curves have no head/tail law
        return ClassReport(cls, grid, False, (0.0, f"not evaluable: {exc}"), ("not evaluable",))
    failures: list[tuple[float, str]] = []
    for name, ok in _pointwise(cls, curve, grid, values):
        bad = np.flatnonzero(~ok)
        if bad.size:
            failures.append((float(grid[bad[0]]), name))
    for name, where, ok in analytic:
        if not ok:
            failures.append((where, name))
    if not failures:
        return ClassReport(cls, grid, True, None)
    first = min(failures, key=lambda f: f[0])
    return ClassReport(cls, grid, False, first, tuple(name for _, name in failures))


# ---------------------------------------------------------------------------
# domination by an exponential envelope, generalized inverse


def exp_dominate(phi: ModulusCurve, density: int = 2001) -> ModulusCurve:
    """Return mu = log2 of the running max of max(phi, 1 - e^{-t}).

    mu is continuous, non-decreasing, tends to -inf at 0+ and to 0- at
    infinity, and phi(t) <= 2**mu(t) for every t > 0.
    """
    check_class(phi, "Phi", density).raise_if_failed()
    return ModulusCurve.log2_dominated(phi, floor=True)


def generalized_inverse(mu: Callable, y, tol: float = BISECT_TOL,
                        lo_limit: float = 1e-300, hi_limit: float = 1e300):
    """sigma(y) = inf{x > 0 : mu(x) >= y} for non-decreasing ``mu``.

    Vectorized over ``y``.  Bisection keeps mu(lo) < y <= mu(hi) and
    returns ``hi``; when no x up to ``hi_limit`` reaches y the result is
    ``inf`` (the inf-of-empty-set convention).
    """
    ys = np.asarray(y, dtype=float)
    yv = np.atleast_1d(ys).astype(float)
    if np.any(np.isnan(yv)) or np.any(yv >= 0):
        raise ValueError("the generalized inverse is taken at y < 0 only")

    def f(x):
        return np.asarray(mu(x), dtype=float)

    hi = np.ones_like(yv)
    short = f(hi) < yv
    while np.any(short):
        hi[short] *= 2.0
        short &= hi < hi_limit
        if np.any(short):
            short[short] = f(hi[short]) < yv[short]
    feasible = f(hi) >= yv

    lo = hi / 2.0
    high = feasible & (f(lo) >= yv)
    while np.any(high):
        hi[high] = lo[high]
        lo[high] = lo[high] / 2.0
        high &= lo > lo_limit
        if np.any(high):
            high[high] = f(lo[high]) >= yv[high]
    # mu(lo) >= y only survives where lo dropped below lo_limit: answer is ~0
    tiny = feasible & (f(lo) >= yv)
    hi[tiny] = lo[tiny]

    active = feasible & ~tiny
    while np.any(active):
        mid = 0.5 * (lo + hi)
        stuck = (mid <= lo) | (mid >= hi)  # no float left strictly between
        up = f(mid[active]) >= yv[active]
        idx = np.flatnonzero(active)
        hi[idx[up]] = mid[idx[up]]
        lo[idx[~up]] = mid[idx[~up]]
        active &= ~((hi - lo <= tol * np.minimum(1.0, hi)) | stuck)

    out = np.where(feasible, hi, math.inf)
    return float(out[0]) if ys.ndim == 0 else out.reshape(ys.shape)


# ---------------------------------------------------------------------------
# regularization


def regularization_grid(curve: ModulusCurve, density: int = 2401, extra: Sequence[float] = ()) -> np.ndarray:
    parts = [symmetric_grid(density), curve.breakpoints(), np.asarray(extra, dtype=float).ravel()]
    grid = np.unique(np.concatenate(parts))
    return grid[np.isfinite(grid) & (grid > 0)]


def regularize_rho(rho: ModulusCurve, density: int = 2401, extra: Sequence[float] = (),
                   check: bool = True) -> ModulusCurve:
    """Smallest-effort majorant rho* of rho with rho* non-decreasing and rho*(t)/t non-increasing.

    eps(t) = rho(t)/t is replaced by its suffix supremum, then
    rho*(t) = sup_{s <= t} s * eps(s).  Values are exact at the grid
    points for piecewise-linear inputs whose breakpoints lie on the grid;
    ``extra`` adds abscissae (typically realized distances) to that grid.
    """
    if check:
        check_class(rho, "P").raise_if_failed()
    t = regularization_grid(rho, density, extra)
    eps = rho(t) / t
    eps_tilde = np.maximum.accumulate(eps[::-1])[::-1]
    star = np.maximum.accumulate(t * eps_tilde)
    _, e = rho.tail_law()
    # beyond the grid, eps is non-increasing for P tails, so the double sup
    # is max(rho*(t_end), rho(t)) <= rho*(t_end) * (t / t_end) ** e
    tail = Tail("power", float(min(max(e, 0.0), 1.0)))
    pts = [(0.0, 0.0)] + list(zip(t.tolist(), star.tolist()))
    return ModulusCurve.piecewise_linear(pts, tail=tail)


def regularize_omega(omega: ModulusCurve, density: int = 2401, extra: Sequence[float] = (),
                     check: bool = True) -> ModulusCurve:
    """Minorant omega* <= omega, non-decreasing, omega*(t)/t non-increasing.

    Conjugates by t -> 1/t (which maps Omega into P), regularizes there
    and conjugates back, so omega*(t) * rho*(1/t) = 1 on the grid.
    """
    if check:
        check_class(omega, "Omega").raise_if_failed()
    extra = np.asarray(extra, dtype=float).ravel()
    extra = 1.0 / extra[extra > 0]
    rho_star = regularize_rho(ModulusCurve.conjugate(omega), density, extra, check=check)
    t, v = rho_star._t[1:], rho_star._v[1:]
    head_exp = rho_star.tail.value
    if head_exp <= 0:
        raise ValueError("omega must vanish at 0 like a positive power")
    pts = list(zip((1.0 / t[::-1]).tolist(), (1.0 / v[::-1]).tolist()))
    return ModulusCurve.piecewise_linear(pts, tail=Tail("affine", 1.0), head=Tail("power", head_exp))


def is_regular(curve: ModulusCurve, grid: np.ndarray) -> tuple[bool, str]:
    """Check non-decreasing values and non-increasing curve(t)/t on a positive grid."""
    t = np.unique(np.asarray(grid, dtype=float))
    t = t[t > 0]
    v = curve(t)
    dv = np.diff(v)
    if np.any(dv < -_tol(v[1:])):
        i = int(np.flatnonzero(dv < -_tol(v[1:]))[0])
        return False, f"curve decreases between t={t[i]:g} and t={t[i + 1]:g}"
    r = v / t
    dr = np.diff(r)
    if np.any(dr > _tol(r[:-1])):
        i = int(np.flatnonzero(dr > _tol(r[:-1]))[0])
        return False, f"curve(t)/t increases between t={t[i]:g} and t={t[i + 1]:g}"
    return True, ""
