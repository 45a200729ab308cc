import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logbm.bodies import (DirectSum, make_box, make_cross, make_segment, random_symmetric_polytope,
                          random_unconditional_polytope)
from logbm.errors import InvalidParameter, Unsupported
from logbm.logops import ProductOracle, l0_sum
from logbm.measure import (MCEstimate, bm_gap, cone_volume_measure, homothetic_distance,
                           log_minkowski_gap, minkowski_gap, phi_curve, phi_prime_zero, volume,
                           volume_exact, volume_mc, surface_area_measure, symm_diff_volume)

seeds = st.integers(0, 10_000)
SQUARE, DIAMOND = make_box([1, 1]), make_cross([1, 1])


# ---------------------------------------------------------------------------
# closed forms for the square and the diamond


def test_log_minkowski_gap_square_diamond():
    # h_C = h_K on the square's facet normals, so only -(1/2) log(2/4) remains
    assert log_minkowski_gap(SQUARE, DIAMOND) == pytest.approx(0.5 * math.log(2), abs=1e-12)


def test_minkowski_gap_square_diamond():
    # diamond scaled by sqrt(2) to area 4; four facets of length 2
    assert minkowski_gap(SQUARE, DIAMOND) == pytest.approx(8 * math.sqrt(2) - 8, abs=1e-12)


def test_bm_gap_square_diamond():
    # (square + diamond)/2 is the square with corners cut at depth 1/2, area 3.5
    assert bm_gap(SQUARE, DIAMOND) == pytest.approx(math.sqrt(3.5) - 1 - math.sqrt(2) / 2, abs=1e-12)


def test_homothetic_distance_square_diamond():
    # unit-area square vs unit-area diamond: four corner triangles with legs 1 - 1/sqrt2
    dist, sigma = homothetic_distance(SQUARE, DIAMOND)
    assert dist == pytest.approx(6 - 4 * math.sqrt(2), abs=1e-12)
    assert sigma == pytest.approx(2.0)


def test_symm_diff_exact_and_sampled_agree():
    exact = symm_diff_volume(SQUARE, DIAMOND)
    assert exact.value == pytest.approx(2.0, abs=1e-12) and exact.stderr == 0.0
    mc = symm_diff_volume(SQUARE, DIAMOND, 200_000, 3, method="mc")
    assert mc.within(2.0, k=4)


def test_symm_diff_exact_needs_polytopes():
    P = ProductOracle(SQUARE, DIAMOND, 0.5)
    with pytest.raises(Unsupported):
        symm_diff_volume(P, SQUARE, method="exact")


# ---------------------------------------------------------------------------
# volumes


def test_volume_exact_of_direct_sum_and_l0_sum():
    D = DirectSum([(make_cross([1, 1]), [0, 1]), (make_segment(2.0), [2])])
    assert volume_exact(D) == pytest.approx(8.0)
    assert volume_exact(l0_sum(SQUARE, DIAMOND, 0.5)) == pytest.approx(8 * math.sqrt(2) - 8)


def test_volume_exact_rejects_oracles():
    with pytest.raises(Unsupported):
        volume_exact(ProductOracle(SQUARE, DIAMOND, 0.5))


def test_volume_falls_back_to_sampling():
    est = volume(ProductOracle(SQUARE, DIAMOND, 0.5), 20_000, 1)
    assert est.samples == 20_000 and est.stderr > 0


def test_volume_mc_needs_seed_and_samples():
    with pytest.raises(InvalidParameter):
        volume_mc(SQUARE, 1000, seed=None)
    with pytest.raises(InvalidParameter):
        volume_mc(SQUARE, 1, seed=0)


def test_volume_mc_is_deterministic_and_thread_independent(monkeypatch):
    body = random_symmetric_polytope(3, np.random.default_rng(2))
    a = volume_mc(body, 100_000, 7)
    assert volume_mc(body, 100_000, 7) == a
    monkeypatch.setenv("LOGBM_THREADS", "4")
    assert volume_mc(body, 100_000, 7) == a


def test_volume_mc_envelope_reduces_error():
    P = make_cross([1, 1, 1, 1])
    plain = volume_mc(P, 100_000, 0)
    boxed = volume_mc(P, 100_000, 0, envelope=make_cross([1.2, 1.2, 1.2, 1.2]))
    assert boxed.stderr < plain.stderr
    assert boxed.within(P.volume, k=4)


@given(seeds, st.integers(2, 4))
def test_volume_mc_within_four_sigma_of_exact(seed, n):
    P = random_symmetric_polytope(n, np.random.default_rng(seed))
    assert volume_mc(P, 20_000, seed).within(P.volume, k=4)


def test_mc_estimate_within():
    e = MCEstimate(1.0, 0.1, 100, 0)
    assert e.within(1.25, k=3) and not e.within(1.35, k=3)
    assert e.within(1.35, k=3, floor=0.1)


# ---------------------------------------------------------------------------
# facet measures


@given(seeds, st.integers(2, 5))
def test_surface_area_measure_is_balanced(seed, n):
    P = random_symmetric_polytope(n, np.random.default_rng(seed))
    S = surface_area_measure(P)
    assert S.closure_defect <= 1e-9 * S.areas.sum()


@given(seeds, st.integers(2, 5))
def test_cone_volumes_sum_to_volume(seed, n):
    P = random_unconditional_polytope(n, np.random.default_rng(seed))
    assert cone_volume_measure(P).total == pytest.approx(P.volume, rel=1e-10)


def test_cone_volume_of_box_is_uniform():
    cv = cone_volume_measure(make_box([1, 2, 3]))
    assert np.allclose(cv.masses, 48 / 6)


# ---------------------------------------------------------------------------
# inequality gaps


@given(seeds, st.integers(2, 4))
def test_minkowski_and_bm_gaps_are_nonnegative(seed, n):
    rng = np.random.default_rng(seed)
    K, C = random_symmetric_polytope(n, rng), random_symmetric_polytope(n, rng)
    assert minkowski_gap(K, C) >= -1e-9
    assert bm_gap(K, C, 0.3, 0.7) >= -1e-9


@given(seeds)
def test_planar_log_minkowski_gap_is_nonnegative(seed):
    rng = np.random.default_rng(seed)
    K, C = random_symmetric_polytope(2, rng), random_symmetric_polytope(2, rng)
    assert log_minkowski_gap(K, C) >= -1e-9


@given(seeds, st.floats(0.2, 5.0))
def test_gaps_vanish_for_dilates(seed, t):
    K = random_symmetric_polytope(3, np.random.default_rng(seed))
    C = K.scaled(t)
    assert abs(log_minkowski_gap(K, C)) < 1e-10
    assert abs(minkowski_gap(K, C)) < 1e-9 * K.volume
    assert abs(bm_gap(K, C)) < 1e-9


def test_gap_needs_polytope_first_argument():
    with pytest.raises(Unsupported):
        minkowski_gap(ProductOracle(SQUARE, DIAMOND, 0.5), SQUARE)


# ---------------------------------------------------------------------------
# the log-volume curve


def test_phi_prime_zero_for_boxes_is_log_ratio_sum():
    a, b = np.array([1.0, 2.0, 0.5]), np.array([3.0, 1.0, 1.0])
    d = phi_prime_zero(make_box(a), make_box(b))
    want = float(np.log(b / a).sum())
    assert d.normalized_formula == pytest.approx(want, abs=1e-12)
    assert d.normalized_fd == pytest.approx(want, abs=1e-9)
    assert d.stderr == 0.0


@given(seeds)
def test_phi_prime_zero_fd_matches_formula(seed):
    rng = np.random.default_rng(seed)
    K, C = random_symmetric_polytope(2, rng), random_symmetric_polytope(2, rng)
    d = phi_prime_zero(K, C)
    assert d.normalized_fd == pytest.approx(d.normalized_formula, abs=1e-3)


def test_phi_curve_for_boxes_is_log_linear():
    rows = phi_curve(make_box([1, 1]), make_box([4, 1]), [0.0, 0.25, 0.5, 1.0])
    logs = [math.log(v) for _, v, _ in rows]
    assert np.allclose(logs, [math.log(4) + t * math.log(4) for t in (0, 0.25, 0.5, 1.0)])
