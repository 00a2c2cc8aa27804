import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tight_embed.spaces import FiniteMetricSpace, random_metric, validate_metric
from tight_embed.verify import (
    EmbeddingReport, check_bounds, compression_exponent_estimate, make_report, measure_moduli, range_check,
    snowflake_check,
)
from conftest import naive_profile


def line(xs):
    xs = np.asarray(xs, dtype=float)
    return validate_metric(np.abs(xs[:, None] - xs[None, :]))


def transformed(X, fn):
    return FiniteMetricSpace(fn(X.d), X.basepoint)


def test_profile_identity_line():
    X = line([0, 1, 3])
    prof = measure_moduli(X, X)
    assert prof.t.tolist() == [1, 2, 3]
    assert prof.rho_at(2.0) == 2 and prof.omega_at(2.0) == 2
    assert np.array_equal(prof.rho, prof.omega)


def test_profile_scaling():
    X = random_metric(10, seed=1)
    a, b = measure_moduli(X, X), measure_moduli(X, transformed(X, lambda d: 2 * d))
    assert np.allclose(b.rho, 2 * a.rho) and np.allclose(b.omega, 2 * a.omega)


def test_profile_step_queries():
    X = line([0, 1, 3])
    prof = measure_moduli(X, X)
    assert prof.rho_at(1.5) == 2 and prof.omega_at(1.5) == 1
    assert prof.rho_at(10.0) == math.inf and prof.omega_at(0.5) == 0


@given(st.integers(0, 10 ** 6))
def test_profile_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    X = random_metric(12, seed)
    Y = random_metric(12, seed + 1)
    perm = rng.permutation(12)
    prof = measure_moduli(X, Y, perm)
    t, rho, omega = naive_profile(X.d.tolist(), Y.d[np.ix_(perm, perm)].tolist())
    assert np.array_equal(prof.t, t)
    assert np.allclose(prof.rho, rho, atol=1e-12) and np.allclose(prof.omega, omega, atol=1e-12)
    assert np.all(np.diff(prof.rho) >= 0) and np.all(np.diff(prof.omega) >= 0)


def test_cardinality_and_pairing_errors():
    X, Y = random_metric(5, 0), random_metric(6, 0)
    with pytest.raises(ValueError):
        measure_moduli(X, Y)
    with pytest.raises(ValueError):
        measure_moduli(X, X, [0, 1, 2])
    with pytest.raises(ValueError):
        measure_moduli(X, X, [0, 1, 2, 3, 9])


def test_profile_csv():
    X = line([0, 1, 3])
    text = measure_moduli(X, X).to_csv()
    assert text.splitlines()[0] == "t,rho_hat,omega_hat" and len(text.splitlines()) == 4


def test_range_isometry_and_empty():
    X = random_metric(10, seed=3)
    rep = range_check(X, X, interval=(0.1, 5.0))
    assert rep.verdict and rep.info["isometric"]
    assert np.all((rep.d_x >= 0.1) & (rep.d_x <= 5.0))
    with pytest.raises(ValueError, match="empty range"):
        range_check(X, X, interval=(1e6, 2e6))
    with pytest.raises(ValueError):
        range_check(X, X, interval=(2.0, 1.0))
    with pytest.raises(ValueError):
        range_check(X, X, interval=(1.0, 2.0), D=0.5)


def test_range_detects_distortion():
    X = random_metric(10, seed=3)
    assert not range_check(X, transformed(X, lambda d: 1.01 * d), interval=(0.1, 50)).verdict
    assert range_check(X, transformed(X, lambda d: 1.01 * d), interval=(0.1, 50), r=1.0, D=1.02).verdict


def test_snowflake_examples():
    X = line(np.linspace(0, 50, 12))
    for s in (0.2, 0.5, 0.9):
        assert snowflake_check(X, X, s=s).verdict
    assert snowflake_check(X, transformed(X, lambda d: d ** 0.5), s=0.5).verdict
    assert not snowflake_check(X, transformed(X, lambda d: d ** 0.4), s=0.5).verdict
    rep = snowflake_check(X, transformed(X, lambda d: 2 * d), s=0.5)
    assert not rep.verdict and np.all(~rep.passed[rep.d_x > 1])
    with pytest.raises(ValueError):
        snowflake_check(X, X, s=1.0)


def integer_line(top, count=30):
    # integer positions: every distance lies in [1, top]
    return line(np.unique(np.round(np.concatenate([[0], np.geomspace(1, top, count)]))))


def test_compression_exponent_examples():
    X = integer_line(1e3)
    assert compression_exponent_estimate(X, X).alpha == 1.0
    est = compression_exponent_estimate(X, transformed(X, np.sqrt))
    assert est.C == 1.0 and abs(est.alpha - 0.5) <= 1e-9
    assert compression_exponent_estimate(X, transformed(X, np.sqrt)) == est
    flat = lambda d: np.where(d > 0, 2.0, 0.0)
    small = compression_exponent_estimate(X, transformed(X, flat)).alpha
    big = integer_line(1e6)
    assert 0 < compression_exponent_estimate(big, transformed(big, flat)).alpha < small
    with pytest.raises(ValueError):
        compression_exponent_estimate(X, X, tau=1e9)


def test_compression_exponent_scaling():
    X = integer_line(1e3, 20)
    base = compression_exponent_estimate(X, transformed(X, lambda d: d ** 0.7))
    scaled = compression_exponent_estimate(X, transformed(X, lambda d: 3 * d ** 0.7))
    assert scaled.C == pytest.approx(3.0 * base.C, rel=1e-12)
    assert scaled.alpha >= base.alpha


def test_check_bounds_nan_is_not_applicable():
    ok = check_bounds([1.0, 2.0], [np.nan, 3.0], [np.nan, np.nan])
    assert ok.tolist() == [True, False]


def test_report_serialization_and_merge():
    a = make_report("demo", [0], [1], [1.0], [1.0], [0.5], [2.0])
    b = make_report("demo", [1], [2], [2.0], [5.0], [1.0], [4.0])
    a.checks["x"] = True
    m = a.merge(b)
    assert isinstance(m, EmbeddingReport) and not m.verdict and m.worst_pair() == (1, 2)
    assert b.merge(a).verdict == m.verdict
    doc = m.to_dict()
    assert doc["failed_pairs"] == 1 and len(doc["rows"]) == 2
    assert m.to_csv().splitlines()[0].startswith("i,j,d_x,d_y")
    empty = make_report("demo", [], [], [], [], [], [])
    assert empty.verdict and empty.worst_pair() is None
