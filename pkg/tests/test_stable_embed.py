import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tight_embed.moduli import ClassViolation, ModulusCurve, Tail, check_class, is_regular
from tight_embed.spaces import random_metric, validate_metric
from tight_embed.stable_embed import (
    RegularityError, StableEmbedding, coordinate_pairs, coordinate_bound_excess, embed_stable, g_pq, h_pq,
    isometric_range_moduli, n_omega, ratio_R, ratio_bound_violations, regularize_for, verify_stable,
)

RHO = ModulusCurve.power_rho(0.5)
OMEGA = ModulusCurve.power_omega(0.5)


def g_oracle(d, base, p, q, x):
    return max(d[p][q] - d[q][x], 0.0) - max(d[p][q] - d[q][base], 0.0)


def test_g_line_example(line3):
    # points 0, 1, 3 on the line; (p, q) = (1, 3) are the indices of the values 1 and 3
    assert g_pq(line3, 0, 1, 2, np.arange(3)).tolist() == [0.0, 0.0, 2.0]
    with pytest.raises(ValueError):
        g_pq(line3, 0, 1, 1, 0)


def test_h_line_example(line3):
    h = h_pq(line3, RHO, 1, 2, np.arange(3))
    assert np.allclose(h, math.sqrt(2) / 2 * np.array([0, 0, 2.0]))
    assert n_omega(h, line3, OMEGA) == pytest.approx(math.sqrt(2) / 2)
    assert n_omega(np.full(3, 4.0), line3, OMEGA) == 0
    assert np.array_equal(h_pq(line3, RHO, 0, 1, np.arange(3)), g_pq(line3, 0, 0, 1, np.arange(3)))
    with pytest.raises(ClassViolation):
        h_pq(line3, OMEGA, 1, 2, 0)


@given(st.integers(0, 10 ** 6))
def test_g_table_matches_formula(seed):
    M = random_metric(7, seed)
    base = seed % 7
    emb = embed_stable(M, base, *regularize_for(M, RHO, OMEGA))
    d = M.d.tolist()
    for row, (p, q) in enumerate(emb.coords):
        w = RHO(d[p][q]) / d[p][q]
        for x in range(7):
            assert emb.table[row, x] == pytest.approx(w * g_oracle(d, base, p, q, x), abs=1e-12)
    assert np.all(emb.table[:, base] == 0)


def test_coordinates_are_ordered_pairs():
    c = coordinate_pairs(4)
    assert len(c) == 12 and len({tuple(x) for x in c}) == 12
    assert not np.any(c[:, 0] == c[:, 1])


def test_two_point_attains_lower():
    M = validate_metric([[0, 5.0], [5.0, 0]])
    rho, omega = regularize_for(M, RHO, OMEGA)
    emb = embed_stable(M, 0, rho, omega)
    assert emb.distance(0, 1) == pytest.approx(rho(5.0), rel=1e-12)
    assert rho(5.0) == pytest.approx(math.sqrt(5), rel=1e-12)
    assert verify_stable(emb).verdict


def test_line_sandwich(line3):
    emb = embed_stable(line3, 0, *regularize_for(line3, RHO, OMEGA))
    rep = verify_stable(emb)
    assert rep.verdict
    assert np.all(rep.d_y >= RHO(rep.d_x) * (1 - 1e-12))
    assert np.all(rep.d_y <= OMEGA(rep.d_x) * (1 + 1e-12))


@pytest.mark.parametrize("s", [0.25, 0.5, 0.9])
def test_random_sandwich(s):
    M = random_metric(25, seed=int(s * 100))
    rho, omega = regularize_for(M, ModulusCurve.power_rho(s), ModulusCurve.power_omega(s))
    emb = embed_stable(M, 0, rho, omega)
    rep = verify_stable(emb)
    assert rep.verdict, rep.summary()
    assert rep.info["max_N_omega"] <= 1 + 1e-9
    worst = ratio_bound_violations(emb)
    assert all(v <= 1e-9 for k, v in worst.items() if k != "max R")
    assert worst["max R"] <= 1 + 1e-9


def test_distance_matrix_matches_loops():
    M = random_metric(9, seed=2)
    emb = embed_stable(M, 3, *regularize_for(M, RHO, OMEGA))
    D = emb.distance_matrix()
    for x, y in itertools.product(range(9), repeat=2):
        assert D[x, y] == pytest.approx(max(abs(a - b) for a, b in zip(emb.table[:, x], emb.table[:, y])), abs=0)


def test_rejects_unregularized():
    M = random_metric(8, seed=0)
    dip = ModulusCurve.piecewise_linear([(0, 0), (1, 1), (1.5, 0.5)], tail=Tail("affine", 0.0))
    assert check_class(dip, "P").verdict
    with pytest.raises(RegularityError, match="regularize_rho"):
        embed_stable(M, 0, dip, OMEGA)
    rho, omega = regularize_for(M, dip, OMEGA)
    assert verify_stable(embed_stable(M, 0, rho, omega)).verdict


def test_rejects_wrong_classes():
    M = random_metric(5, seed=0)
    with pytest.raises(ClassViolation):
        embed_stable(M, 0, OMEGA, OMEGA)
    with pytest.raises(ValueError):
        embed_stable(M, 9, RHO, OMEGA)


def test_ratio_bounds_cases(line3):
    rb = ratio_R(line3, RHO, OMEGA, 1, 2, 0, 2)
    assert set(rb.bounds) == {"coordinate weight", "long separation"}
    assert rb.holds and rb.value <= 1
    rb = ratio_R(line3, RHO, OMEGA, 0, 1, 0, 1)
    assert set(rb.bounds) == {"coordinate weight", "short coordinate", "short separation"}
    assert rb.holds
    with pytest.raises(ValueError):
        ratio_R(line3, RHO, OMEGA, 0, 1, 2, 2)


def test_ratio_small_for_far_coordinates():
    M = validate_metric([[0, 100, 101], [100, 0, 1], [101, 1, 0]])
    rb = ratio_R(M, RHO, OMEGA, 0, 1, 0, 2)
    assert rb.bounds["coordinate weight"] == pytest.approx(0.1)
    assert rb.value <= 0.1 + 1e-12


def test_coordinate_bound(line3):
    assert coordinate_bound_excess(line3, 0) <= 1e-12
    M = random_metric(12, seed=4)
    for base in (0, 5):
        assert coordinate_bound_excess(M, base) <= 1e-9


def test_json_round_trip():
    M = random_metric(10, seed=6)
    emb = embed_stable(M, 2, *regularize_for(M, RHO, OMEGA))
    again = StableEmbedding.from_dict(emb.to_dict(verify_stable(emb)))
    assert np.array_equal(again.table, emb.table)
    assert verify_stable(again).verdict == verify_stable(emb).verdict


@pytest.mark.parametrize("s1, s2", [(0.1, 10.0), (1.0, 1.0), (0.01, 500.0)])
def test_isometric_range_moduli(s1, s2):
    rho, omega = isometric_range_moduli(s1, s2)
    assert check_class(rho, "P").verdict and check_class(omega, "Omega").verdict
    grid = np.geomspace(1e-6, 1e6, 3001)
    assert is_regular(rho, grid)[0] and is_regular(omega, grid)[0]
    t = np.geomspace(s1, s2, 50)
    assert np.allclose(rho(t), t, rtol=1e-12) and np.allclose(omega(t), t, rtol=1e-12)


def test_isometric_range_rejects():
    with pytest.raises(ValueError):
        isometric_range_moduli(2.0, 3.0)
