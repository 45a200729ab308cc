import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logbm.bodies import (VPolytope, cut_corners, direct_sum, make_box, make_cross, make_segment,
                          random_unconditional_polytope)
from logbm.coxeter import chamber_generators
from logbm.errors import InvalidParameter, PreconditionViolation
from logbm.logops import DiagonalMap
from logbm.stability import (best_diagonal_fit, bowtie_partition, containment_dilation,
                             coordinate_section, decomposition_delta, dilate_fit, midpoint_excess,
                             misfit, nested_dilation_check, omega_lambda, stab_bound,
                             stability_report, theta)

seeds = st.integers(0, 10_000)


# ---------------------------------------------------------------------------
# closed-form helpers


def test_theta_value():
    # 8 * 4 * (1e-10)^(1/10) / 0.5^(1/5)
    assert theta(1e-10, 0.5, 2) == pytest.approx(3.2 * 2 ** 0.2, rel=1e-12)


def test_stab_bound_value():
    assert stab_bound(0.5, 0.5, 3, 2) == pytest.approx(8.0)
    assert stab_bound(0.0, 0.5, 3) == 0.0


def test_omega_lambda_value():
    assert omega_lambda(0.5, 0.5, 1) == pytest.approx(10.0)
    assert omega_lambda(0.25 ** 19 * 0.25, 0.25, 2, c=1.0) == pytest.approx(4 * 0.25)


@pytest.mark.parametrize("func, args", [(theta, (0.1, 0.0, 2)), (theta, (0.1, 0.6, 2)),
                                        (theta, (-0.1, 0.5, 2)), (stab_bound, (0.1, 0.7, 2)),
                                        (omega_lambda, (0.1, 1.0, 2))])
def test_helper_domains(func, args):
    with pytest.raises(InvalidParameter):
        func(*args)


@given(st.floats(1e-12, 1.0), st.floats(1e-12, 1.0), st.floats(0.01, 0.5), st.integers(1, 6))
def test_bounds_are_monotone_in_eps(e1, e2, tau, n):
    lo, hi = sorted((e1, e2))
    assert theta(lo, tau, n) <= theta(hi, tau, n) * (1 + 1e-12)
    assert stab_bound(lo, tau, n) <= stab_bound(hi, tau, n) * (1 + 1e-12)


# ---------------------------------------------------------------------------
# partitions


def test_bowtie_partition_examples():
    assert bowtie_partition([1, 1.05, 5], 0.1) == [[0, 1], [2]]
    # chained ratios join even when the ends are far apart
    assert bowtie_partition([1.0, 1.05, 1.1025], 0.06) == [[0, 1, 2]]
    assert bowtie_partition([3.0, 1.0, 3.0], 0.0) == [[0, 2], [1]]


def test_bowtie_partition_domain():
    with pytest.raises(InvalidParameter):
        bowtie_partition([1.0, 0.0], 0.1)
    with pytest.raises(InvalidParameter):
        bowtie_partition([1.0, 2.0], -0.1)


@given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=10), st.floats(0.0, 3.0))
def test_bowtie_partition_properties(entries, th):
    blocks = bowtie_partition(entries, th)
    assert sorted(i for b in blocks for i in b) == list(range(len(entries)))
    logs = np.log(entries)
    # any two blocks are separated by more than theta
    for a in blocks:
        for b in blocks:
            if a is not b:
                assert np.min(np.abs(logs[a][:, None] - logs[b][None, :])) > th
    # within a block the sorted log-gaps are at most theta
    for b in blocks:
        assert np.all(np.diff(np.sort(logs[b])) <= th)


# ---------------------------------------------------------------------------
# diagonal fit


def test_misfit_examples():
    sq = make_box([1, 1])
    assert misfit(sq, make_box([2, 1]), [1, 1]) == pytest.approx(1.0)
    assert misfit(sq, make_box([2, 1]), [2, 1]) == pytest.approx(0.0, abs=1e-12)
    # square vs diamond of the same area: symmetric difference 4 (6 - 4 sqrt 2), relative
    assert misfit(sq, make_cross([math.sqrt(2)] * 2), [1, 1]) == pytest.approx(6 - 4 * math.sqrt(2))


def test_misfit_sampled_agrees_with_exact():
    sq = make_box([1, 1])
    mc = misfit(sq, make_box([2, 1]), [1, 1], samples=200_000, seed=4)
    assert mc == pytest.approx(1.0, abs=0.02)


@given(seeds)
def test_best_fit_recovers_diagonal(seed):
    rng = np.random.default_rng(seed)
    K = random_unconditional_polytope(2, rng)
    phi = np.exp(rng.uniform(-0.4, 0.4, 2))
    fit = best_diagonal_fit(K, K.linear_image(np.diag(phi)))
    assert fit.status == "ok"
    assert fit.residual < 1e-6
    assert np.allclose(fit.phi.array, phi, rtol=1e-4)


def test_best_fit_beats_log_grid():
    K, C = make_box([1, 1]), make_cross([2.0, 1.0])
    fit = best_diagonal_fit(K, C)
    start = np.log(C.support(np.eye(2)) / K.support(np.eye(2)))
    grid = np.linspace(-0.5, 0.5, 21)
    brute = min(misfit(K, C, np.exp(start + [a, b])) for a in grid for b in grid)
    assert fit.residual <= brute + 1e-9


# ---------------------------------------------------------------------------
# sections and dilations


def test_coordinate_section_of_cross():
    S = coordinate_section(make_cross([1, 2, 3]), [1, 2])
    assert S.volume == pytest.approx(2 * 2 * 3)
    assert coordinate_section(make_cross([1, 2]), [0]).volume == pytest.approx(2.0)


def test_dilate_fit_square_and_diamond():
    A, B = make_box([1, 1]), make_cross([1, 1])
    s, dev = dilate_fit(A, B)
    # dev = max g_A over B's vertices times max g_B over A's vertices, minus one
    assert s == pytest.approx(0.5)
    assert dev == pytest.approx(1.0 * 2.0 - 1.0)
    s, dev = dilate_fit(A, A.scaled(3.0))
    assert s == pytest.approx(3.0) and dev == pytest.approx(0.0, abs=1e-12)


@given(seeds)
def test_dilate_fit_product_formula(seed):
    rng = np.random.default_rng(seed)
    A, B = random_unconditional_polytope(3, rng), random_unconditional_polytope(3, rng)
    s, dev = dilate_fit(A, B)
    want = A.gauge(B.vertices).max() * B.gauge(A.vertices).max() - 1.0
    assert dev == pytest.approx(want, rel=1e-9, abs=1e-12)
    assert np.all(B.gauge(s * A.vertices) <= 1 + 1e-9)


def test_decomposition_delta_examples():
    assert decomposition_delta(make_box([1, 2, 3]), [[0], [1, 2]]) == 0.0
    assert decomposition_delta(make_cross([1, 1]), [[0], [1]]) == pytest.approx(1.0)
    assert decomposition_delta(make_cross([1, 1]), [[0, 1]]) == 0.0
    with pytest.raises(InvalidParameter):
        decomposition_delta(make_cross([1, 1]), [[0], [0]])


def test_containment_dilation():
    assert containment_dilation(make_box([1, 1]), make_box([2, 2])) == pytest.approx(1.0)
    assert containment_dilation(make_box([1, 1]), make_cross([1, 1])) == 0.0


def test_nested_dilation_check():
    K = make_box([1, 1])
    t, bound, hyp = nested_dilation_check(K.scaled(0.99), K)
    assert t == pytest.approx(1 / 0.99 - 1)
    assert bound == pytest.approx(4 * math.sqrt((4 - 4 * 0.99 ** 2) / (4 * 0.99 ** 2)))
    assert hyp and t <= bound
    with pytest.raises(PreconditionViolation):
        nested_dilation_check(K, K.scaled(0.5))


def test_midpoint_excess_for_geometric_curve():
    eta, mid, allowed = midpoint_excess(1.0, 2.0, 2.0 ** 0.5, 4.0, 0.25)
    assert eta == pytest.approx(0.0, abs=1e-12) and mid == pytest.approx(0.0, abs=1e-12)
    eta, mid, allowed = midpoint_excess(1.0, 2.2, 1.5, 4.0, 0.25)
    assert allowed == pytest.approx(eta / 0.25)


# ---------------------------------------------------------------------------
# the report


def test_report_on_direct_sum_with_block_scalars():
    K = direct_sum([(make_cross([1, 2]), [0, 1]), (make_segment(1.0), [2])]).to_polytope()
    phi = DiagonalMap([2.0, 2.0, 0.5])
    r = stability_report(K, phi.apply(K))
    assert r.equality_branch
    assert r.partition == [[0, 1], [2]]
    assert np.allclose(r.scales, [2.0, 0.5])
    assert r.delta == pytest.approx(0.0, abs=1e-7)
    assert r.inner_containment


def test_report_on_diamond_and_stretch_is_not_equality():
    K = make_cross([1, 1])
    r = stability_report(K, DiagonalMap([4.0, 1.0]).apply(K))
    assert r.eps > 1e-3 and not r.equality_branch
    assert r.delta <= r.bound


@given(seeds)
def test_report_delta_within_bound(seed):
    rng = np.random.default_rng(seed)
    K = random_unconditional_polytope(2, rng)
    C = random_unconditional_polytope(2, rng)
    r = stability_report(K, C, lam=0.4, tau=0.3)
    assert r.delta <= r.bound
    assert r.inner_containment
    assert r.to_json()["ratio"] is None or r.to_json()["ratio"] >= 0


def test_report_through_chamber_transfer():
    rs = chamber_generators("B", 2)
    K = cut_corners(make_box([1, 1]), 0.3)
    r = stability_report(K, K.scaled(1.5), rs=rs)
    assert r.equality_branch and r.delta == pytest.approx(0.0, abs=1e-7)
    assert any("chamber transfer" in note for note in r.notes)


@pytest.mark.parametrize("kwargs", [{"lam": 0.0}, {"lam": 1.0}, {"tau": 0.6}, {"lam": 0.2, "tau": 0.3},
                                    {"seed": None}])
def test_report_preconditions(kwargs):
    with pytest.raises(InvalidParameter):
        stability_report(make_box([1, 1]), make_box([1, 2]), **kwargs)


def test_report_needs_unconditional_bodies():
    skew = VPolytope(np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -0.5], [-1.0, 0.5]]))
    with pytest.raises(PreconditionViolation):
        stability_report(skew, make_box([1, 1]))
