import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


# ---------------------------------------------------------------------------
# independent oracles: plain loops, no shared code with the package


def naive_profile(dx, dy):
    """Double loop over pairs: (t, rho_hat(t), omega_hat(t)) at every realized distance."""
    n = len(dx)
    pairs = [(dx[i][j], dy[i][j]) for i in range(n) for j in range(i + 1, n)]
    ts = sorted({a for a, _ in pairs})
    rho = [min(b for a, b in pairs if a >= t) for t in ts]
    omega = [max(b for a, b in pairs if a <= t) for t in ts]
    return np.array(ts), np.array(rho), np.array(omega)


def nested_sup_regularization(f, grid):
    """rho*(t_i) from the double sup, evaluated with explicit loops over the grid."""
    eps = [f(t) / t for t in grid]
    m = len(grid)
    eps_tilde = [max(eps[j] for j in range(i, m)) for i in range(m)]
    out = []
    for i in range(m):
        out.append(max(grid[j] * eps_tilde[j] for j in range(i + 1)))
    return np.array(out)


def dense_running_max(f, grid):
    best, out = -math.inf, []
    for t in grid:
        best = max(best, f(t))
        out.append(best)
    return np.array(out)


def bisect_oracle(fn, y, lo=1e-12, hi=1e12, iters=200):
    """Geometric bisection for inf{x: fn(x) >= y}."""
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if fn(mid) >= y:
            hi = mid
        else:
            lo = mid
    return hi


def loop_distance_matrix(points, p):
    n = len(points)
    d = np.zeros((n, n))
    for i, j in itertools.product(range(n), repeat=2):
        diff = [abs(a - b) for a, b in zip(points[i], points[j])]
        d[i, j] = max(diff) if math.isinf(p) else sum(x ** p for x in diff) ** (1 / p)
    return d


@pytest.fixture
def line3():
    from tight_embed.spaces import validate_metric

    return validate_metric([[0, 1, 3], [1, 0, 2], [3, 2, 0]])
