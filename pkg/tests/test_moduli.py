import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tight_embed.moduli import (
    ClassViolation, ModulusCurve, Tail, check_class, exp_dominate, generalized_inverse, is_regular,
    regularization_grid, regularize_omega, regularize_rho, symmetric_grid,
)
from conftest import bisect_oracle, dense_running_max, nested_sup_regularization

PL = ModulusCurve.piecewise_linear


def random_phi(seed, knots=6):
    """A piecewise-linear member of Phi: zero at 0, positive after, flat tail below 1."""
    rng = np.random.default_rng(seed)
    t = np.sort(np.exp(rng.uniform(math.log(1e-3), math.log(1e3), knots)))
    v = rng.uniform(0.01, 0.99, knots)
    return PL([(0.0, 0.0)] + list(zip(t, v)))


def dip_rho():
    return PL([(0, 0), (1, 1), (1.5, 0.5)], tail=Tail("affine", 0.0))


# -- evaluation --------------------------------------------------------------


def test_family_values():
    assert ModulusCurve.power_rho(0.5)(4.0) == 2.0
    assert ModulusCurve.power_rho(0.5)(0.5) == 0.5
    assert ModulusCurve.power_omega(0.5)(0.25) == 0.5
    assert PL([(0, 0), (1, 1), (2, 1.5)])(1.5) == pytest.approx(1.25)
    assert ModulusCurve.exp_floor()(1.0) == pytest.approx(1 - math.exp(-1))


def test_negative_argument_rejected():
    with pytest.raises(ValueError):
        ModulusCurve.power_rho(0.5)(-1.0)


def test_pl_head_and_tail():
    c = PL([(1, 1), (2, 2)], tail=Tail("power", 0.5), head=Tail("power", 0.25))
    assert c(8.0) == pytest.approx(2 * 2.0)
    assert c(1 / 16) == pytest.approx(0.5)


@pytest.mark.parametrize("bad", [[(1, 0), (0.5, 1)], [(-1, 0)], [], [(0, 0), (0, 1)]])
def test_pl_validation(bad):
    with pytest.raises(ValueError):
        PL(bad)


@given(st.sampled_from(["power_rho", "power_omega"]), st.floats(0.05, 1.0))
def test_spec_round_trip_power(fam, alpha):
    c = ModulusCurve.from_spec({"family": fam, "alpha": alpha})
    assert ModulusCurve.from_spec(c.to_spec()) == c


def test_spec_round_trip_composite():
    for c in (dip_rho(), ModulusCurve.exp_floor(), exp_dominate(random_phi(1)),
              regularize_omega(ModulusCurve.power_omega(0.5), density=101)):
        again = ModulusCurve.from_spec(c.to_spec())
        t = np.geomspace(1e-4, 1e4, 50)
        assert np.array_equal(again(t), c(t))


# -- class certification ------------------------------------------------------


def test_class_examples():
    assert check_class(ModulusCurve.power_omega(0.5), "Omega").verdict
    assert check_class(ModulusCurve.power_rho(0.5), "P").verdict
    assert check_class(ModulusCurve.exp_floor(), "Phi").verdict
    rep = check_class(ModulusCurve.power_rho(1.0), "P")
    assert not rep.verdict and rep.first_violation[1] == "lim rho(t)/t = 0"


def test_class_clause_names():
    rep = check_class(ModulusCurve.power_omega(0.5), "P")
    assert rep.first_violation[1] == "rho(t)=t on [0,1]"
    with pytest.raises(ClassViolation) as info:
        rep.raise_if_failed()
    assert info.value.clause == "rho(t)=t on [0,1]"
    rep = check_class(PL([(0, 0), (1, 1.0)]), "Phi")
    assert "phi(t)<1" in rep.failed


def test_unknown_class():
    with pytest.raises(ValueError):
        check_class(ModulusCurve.exp_floor(), "Psi")


def test_exp_floor_strict_bound_at_large_t():
    # 1 - e^{-t} rounds to 1.0 in floating point, but stays below 1
    assert ModulusCurve.exp_floor()(50.0) == 1.0
    assert check_class(ModulusCurve.exp_floor(), "Phi", extra=[1e5]).verdict


# -- exponential domination -----------------------------------------------------


def test_exp_dominate_of_exp_floor_is_log():
    mu = exp_dominate(ModulusCurve.exp_floor())
    t = np.geomspace(1e-3, 30, 200)
    assert np.allclose(mu(t), np.log2(1 - np.exp(-t)), rtol=1e-12)


def test_exp_dominate_capped_example():
    phi = PL([(0, 0), (0.5, 0.9)], tail=Tail("affine", 0.0))
    mu = exp_dominate(phi)
    assert mu(2.0) == pytest.approx(math.log2(0.9), abs=1e-12)
    grid = np.geomspace(1e-3, 10, 3000)
    oracle = np.log2(dense_running_max(lambda s: max(phi(s), 1 - math.exp(-s)), grid))
    assert np.allclose(mu(grid), oracle, atol=1e-12)


def test_exp_dominate_rejects_non_phi():
    with pytest.raises(ClassViolation):
        exp_dominate(ModulusCurve.power_rho(0.5))


@given(st.integers(0, 10 ** 6))
def test_exp_dominate_property(seed):
    phi = random_phi(seed)
    mu = exp_dominate(phi)
    t = np.geomspace(1e-5, 1e5, 400)
    m = mu(t)
    assert np.all(phi(t) <= 2.0 ** m * (1 + 1e-12))
    assert np.all(np.diff(m) >= 0)
    assert np.all(m[t <= 30] < 0)  # 1 - e^{-t} rounds to 1.0 beyond


# -- generalized inverse ------------------------------------------------------


def test_sigma_closed_form():
    mu = ModulusCurve.log2_dominated(ModulusCurve.saturating(), floor=False)
    assert generalized_inverse(mu, -1.0) == pytest.approx(1.0, abs=1e-9)
    n = np.arange(1, 8)
    exact = 2.0 ** -n / (1 - 2.0 ** -n)
    assert np.allclose(generalized_inverse(mu, -n.astype(float)), exact, rtol=1e-10)


def test_sigma_step_function():
    def step(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 1, -2.0, -0.5)

    assert generalized_inverse(step, -1.0) == pytest.approx(1.0, abs=1e-12)


def test_sigma_tends_to_zero():
    mu = exp_dominate(ModulusCurve.exp_floor())
    vals = generalized_inverse(mu, np.array([-5.0, -20.0, -60.0]))
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-17


def test_sigma_rejects_nonnegative():
    with pytest.raises(ValueError):
        generalized_inverse(ModulusCurve.exp_floor(), 0.0)


def test_sigma_infeasible_is_inf():
    capped = lambda x: np.full_like(np.asarray(x, dtype=float), -3.0)
    assert generalized_inverse(capped, -1.0) == math.inf


@given(st.integers(0, 10 ** 6), st.floats(-30, -0.01))
def test_sigma_matches_bisection_oracle(seed, y):
    mu = exp_dominate(random_phi(seed))
    ref = bisect_oracle(lambda x: float(mu(x)), y)
    assert generalized_inverse(mu, y) == pytest.approx(ref, rel=1e-9, abs=1e-12)


# -- regularization -------------------------------------------------------------


def test_regularize_fixed_points():
    for rho in (ModulusCurve.power_rho(0.5), PL([(0, 0), (1, 1)], tail=Tail("affine", 0.0))):
        star = regularize_rho(rho, density=401)
        t = regularization_grid(rho, 401)
        assert np.allclose(star(t), rho(t), rtol=1e-9)
        between = np.sqrt(t[1:] * t[:-1])  # chords of a concave curve lie just below it
        assert np.allclose(star(between), rho(between), rtol=1e-3)
    omega = ModulusCurve.power_omega(0.5)
    star = regularize_omega(omega, density=401)
    t = symmetric_grid(401)
    assert np.allclose(star(t), omega(t), rtol=1e-9)


def test_regularize_dip_against_oracle():
    rho = dip_rho()
    star = regularize_rho(rho, density=201)
    grid = regularization_grid(rho, 201)
    assert np.allclose(star(grid), nested_sup_regularization(rho, grid), atol=1e-9)
    assert np.allclose(star(grid), np.minimum(grid, 1.0), atol=1e-12)


@given(st.integers(0, 10 ** 6))
def test_regularize_rho_properties(seed):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(1.0, 50.0, 5))
    v = np.minimum(t, rng.uniform(0.2, 1.0, 5) * t)
    rho = PL([(0, 0), (1, 1)] + list(zip(t, v)), tail=Tail("power", rng.uniform(0, 0.9)))
    if not check_class(rho, "P").verdict:
        return
    star = regularize_rho(rho, density=301)
    grid = regularization_grid(rho, 301)
    s = star(grid)
    assert np.all(s >= rho(grid) - 1e-9 * np.maximum(1, grid))
    assert np.all(np.diff(s) >= -1e-12)
    assert is_regular(star, grid)[0]
    assert check_class(star, "P").verdict
    assert np.allclose(s, nested_sup_regularization(rho, grid), atol=1e-9)
    again = regularize_rho(star, density=301)
    assert np.allclose(again(grid), s, atol=1e-9)


def test_regularize_omega_wiggly():
    omega = PL([(1e-4, 0.05), (0.01, 0.2), (0.02, 0.15), (0.3, 0.6), (0.5, 0.55), (1, 1), (2, 2)],
               tail=Tail("affine", 1.0), head=Tail("power", 0.3))
    assert check_class(omega, "Omega").verdict
    star = regularize_omega(omega, density=601)
    grid = np.geomspace(1e-6, 1e6, 10 ** 4)
    assert np.all(star(grid) <= omega(grid) * (1 + 1e-9))
    assert check_class(star, "Omega").verdict
    assert is_regular(star, grid)[0]
    rho_star = regularize_rho(ModulusCurve.conjugate(omega), density=601)
    t = regularization_grid(rho_star, 601)
    assert np.allclose(star(t) * rho_star(1 / t), 1.0, atol=1e-9)


def test_regularize_rejects_wrong_class():
    with pytest.raises(ClassViolation):
        regularize_rho(ModulusCurve.power_omega(0.5))
    with pytest.raises(ClassViolation):
        regularize_omega(ModulusCurve.power_rho(0.5))


def test_is_regular_detects_dip():
    ok, why = is_regular(dip_rho(), np.geomspace(0.1, 10, 100))
    assert not ok and "decreases" in why
