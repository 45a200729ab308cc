import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from logbm.bodies import (DirectSum, HPolytope, VPolytope, box_halfwidths, contains, cut_corners,
                          direct_sum, halfspace_vertices, is_symmetric, is_unconditional,
                          linear_image, make_box, make_cross, make_segment,
                          random_symmetric_polytope, random_unconditional_polytope, same_polytope,
                          support, unconditional_closure)
from logbm.errors import InvalidParameter, PreconditionViolation

seeds = st.integers(0, 10_000)


# ---------------------------------------------------------------------------
# constructors


def test_box_volumes():
    assert make_box([1, 1]).volume == pytest.approx(4.0, abs=1e-12)
    assert make_box([0.25, 2, 2]).volume == pytest.approx(8.0, abs=1e-12)


def test_box_rejects_degenerate_halfwidth():
    with pytest.raises(InvalidParameter):
        make_box([1, 0])


@pytest.mark.parametrize("scales, vol", [([1, 1], 2.0), ([1, 1, 1], 4 / 3)])
def test_cross_volume(scales, vol):
    assert make_cross(scales).volume == pytest.approx(vol, abs=1e-12)


def test_cross_support_along_long_axis():
    assert make_cross([2, 1]).support(np.array([1.0, 0.0])) == pytest.approx(2.0)


def test_cross_rejects_nonpositive_scale():
    with pytest.raises(InvalidParameter):
        make_cross([1, -1])


def test_cut_square_is_octagon_with_area_3_5():
    P = cut_corners(make_box([1, 1]), 0.5)
    assert len(P.offsets) == 8
    assert P.volume == pytest.approx(3.5, abs=1e-12)
    # independent oracle: convex hull area of the enumerated vertices
    assert ConvexHull(P.vertices).volume == pytest.approx(3.5, abs=1e-12)


def test_cut_depth_to_zero_recovers_box_volume():
    vols = [cut_corners(make_box([1, 2, 0.5]), d).volume for d in (1e-1, 1e-2, 1e-3)]
    assert all(v < 8.0 for v in vols)
    assert 8.0 - vols[-1] < 1e-6


def test_cut_depth_out_of_range():
    with pytest.raises(InvalidParameter):
        cut_corners(make_box([1, 1]), 1.5)


# ---------------------------------------------------------------------------
# support / contains


@pytest.mark.parametrize("body, u, h", [
    (make_box([1, 2]), [1, 0], 1.0),
    (make_box([1, 1]), [1, 1], 2.0),
    (make_cross([1, 1]), [1 / math.sqrt(2), 1 / math.sqrt(2)], 1 / math.sqrt(2)),
])
def test_support_examples(body, u, h):
    assert support(body, np.array(u, float)) == pytest.approx(h, abs=1e-12)


def test_support_dimension_mismatch():
    with pytest.raises(InvalidParameter):
        make_box([1, 1]).support(np.ones(3))


def test_contains_examples():
    sq = make_box([1, 1])
    assert contains(sq, np.array([0.5, -0.9]))
    assert not contains(sq, np.array([1.0001, 0.0]))
    assert contains(make_cross([1, 1, 1]), np.full(3, 1 / 3))


def test_hpolytope_support_by_linear_programming_matches_vertices():
    rng = np.random.default_rng(3)
    P = random_symmetric_polytope(3, rng)
    u = rng.standard_normal((20, 3))
    lp = HPolytope(P.normals, P.offsets)
    lp._vertices = None
    lp.dim  # unchanged
    via_vertices = P.support(u)
    from scipy.optimize import linprog
    oracle = [-linprog(-d, A_ub=P.normals, b_ub=P.offsets, bounds=[(None, None)] * 3).fun for d in u]
    assert np.allclose(via_vertices, oracle, atol=1e-9)


# ---------------------------------------------------------------------------
# direct sums and linear images


def test_direct_sum_of_segments_is_box():
    D = direct_sum([(make_segment(1.0), [0]), (make_segment(2.0), [1])])
    assert same_polytope(D.to_polytope(), make_box([1, 2]))
    assert D.volume == pytest.approx(8.0)


def test_direct_sum_volume_is_product():
    D = direct_sum([(make_cross([1, 1]), [0, 1]), (make_segment(1.0), [2])])
    assert D.volume == pytest.approx(4.0)
    assert D.to_polytope().volume == pytest.approx(4.0, abs=1e-12)


def test_direct_sum_rejects_overlap():
    with pytest.raises(InvalidParameter):
        direct_sum([(make_cross([1, 1]), [0, 1]), (make_cross([1, 1]), [1, 2])])


def test_direct_sum_support_and_gauge():
    D = DirectSum([(make_box([1, 2]), [0, 2]), (make_segment(3.0), [1])])
    u = np.array([1.0, -1.0, 1.0])
    assert D.support(u) == pytest.approx(1 + 3 + 2)
    assert D.gauge(np.array([0.5, 3.0, 1.0])) == pytest.approx(1.0)


def test_linear_image_examples():
    assert same_polytope(linear_image(make_box([1, 1]), np.diag([2.0, 3.0])), make_box([2, 3]))
    P = make_cross([1, 1, 1])
    assert same_polytope(linear_image(P, np.eye(3)), P)
    perm = np.eye(3)[[2, 0, 1]]
    assert same_polytope(linear_image(P, perm), P)


def test_linear_image_singular():
    with pytest.raises(InvalidParameter):
        linear_image(make_box([1, 1]), np.array([[1.0, 2.0], [2.0, 4.0]]))


@given(seeds)
def test_linear_image_support_rule_and_volume(seed):
    rng = np.random.default_rng(seed)
    P = random_symmetric_polytope(3, rng)
    A = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    Q = P.linear_image(A)
    u = rng.standard_normal((10, 3))
    assert np.allclose(Q.support(u), P.support(u @ A), rtol=1e-9, atol=1e-9)
    assert Q.volume == pytest.approx(P.volume * abs(np.linalg.det(A)), rel=1e-9)


# ---------------------------------------------------------------------------
# canonical form


def test_near_parallel_rows_are_one_facet():
    # rows 1e-8 apart meet at nearly the same vertices; the volume must not double count
    A = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1e-8], [1, -1e-8]], float)
    P = HPolytope(A, np.ones(6))
    assert P.volume == pytest.approx(4.0, abs=1e-6)
    assert P.volume == pytest.approx(ConvexHull(P.vertices).volume, abs=1e-9)


def test_halfspace_vertices_of_square():
    A = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], float)
    V = halfspace_vertices(A, np.ones(4))
    assert sorted(map(tuple, np.round(V, 12))) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]


def test_unbounded_halfspaces_rejected():
    with pytest.raises(InvalidParameter):
        HPolytope(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]]), np.ones(3))


def test_origin_outside_rejected():
    with pytest.raises(InvalidParameter):
        HPolytope(np.eye(2), np.array([1.0, -1.0]))


@given(seeds, st.integers(2, 4))
def test_h_to_v_round_trip(seed, n):
    P = random_symmetric_polytope(n, np.random.default_rng(seed))
    Q = VPolytope(P.vertices).to_hpolytope()
    assert same_polytope(P, Q, tol=1e-8)


@given(seeds, st.integers(2, 4))
def test_exact_volume_matches_hull_oracle(seed, n):
    P = random_symmetric_polytope(n, np.random.default_rng(seed))
    assert P.volume == pytest.approx(ConvexHull(P.vertices).volume, rel=1e-9)


# ---------------------------------------------------------------------------
# invariants


@given(seeds, st.floats(0.1, 10.0))
def test_support_homogeneity(seed, t):
    rng = np.random.default_rng(seed)
    bodies = [random_symmetric_polytope(3, rng), make_cross(rng.uniform(0.5, 2, 3)),
              direct_sum([(make_cross([1, 2]), [0, 1]), (make_segment(0.5), [2])])]
    u = rng.standard_normal((8, 3))
    for B in bodies:
        assert np.allclose(B.support(t * u), t * B.support(u), rtol=1e-12, atol=1e-12)


@given(seeds)
def test_support_subadditivity(seed):
    rng = np.random.default_rng(seed)
    P = random_unconditional_polytope(3, rng)
    u, v = rng.standard_normal((2, 16, 3))
    assert np.all(P.support(u + v) <= P.support(u) + P.support(v) + 1e-12)


@given(seeds)
def test_membership_matches_halfspaces(seed):
    rng = np.random.default_rng(seed)
    P = random_symmetric_polytope(3, rng)
    x = rng.uniform(-1.5, 1.5, (1000, 3))
    slack = np.max(x @ P.normals.T - P.offsets, axis=1)
    clear = np.abs(slack) > 1e-8
    assert np.array_equal(P.contains(x)[clear], (slack <= 0)[clear])


@given(seeds)
def test_membership_matches_support_on_sampled_directions(seed):
    rng = np.random.default_rng(seed)
    P = random_unconditional_polytope(2, rng)
    u = rng.standard_normal((4000, 2))
    h = P.support(u)
    x = rng.uniform(-1.5, 1.5, (300, 2))
    by_support = np.all(x @ u.T <= h + 1e-12, axis=1)
    inside = P.contains(x)
    # sampling the sphere can only under-constrain, so support-based membership contains the truth
    assert np.all(by_support[inside])


def test_symmetry_predicates():
    assert is_symmetric(make_cross([1, 2]))
    assert is_unconditional(make_box([1, 2]))
    skew = VPolytope(np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -0.5], [-1.0, 0.5]]))
    assert is_symmetric(skew) and not is_unconditional(skew)
    assert np.allclose(box_halfwidths(make_box([1, 3])), [1.0, 3.0])
    assert box_halfwidths(make_cross([1, 3])) is None


# ---------------------------------------------------------------------------
# unconditional closure


def test_closure_of_box_is_box():
    assert same_polytope(unconditional_closure(make_box([1, 2])), make_box([1, 2]))


def test_closure_of_simplex_piece_is_cross():
    Q = unconditional_closure(np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]))
    assert same_polytope(Q, make_cross([2, 2]))
    # grid membership oracle: |x| + |y| <= 2
    g = np.linspace(-2.5, 2.5, 41)
    X = np.array(np.meshgrid(g, g)).reshape(2, -1).T
    truth = np.abs(X).sum(axis=1) <= 2
    clear = np.abs(np.abs(X).sum(axis=1) - 2) > 1e-9
    assert np.array_equal(Q.contains(X)[clear], truth[clear])


def test_closure_rejects_non_down_closed_piece():
    with pytest.raises(PreconditionViolation):
        unconditional_closure(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 0.2]]) + [0, 0])


def test_random_generators_are_valid():
    rng = np.random.default_rng(0)
    assert is_unconditional(random_unconditional_polytope(3, rng))
    assert is_symmetric(random_symmetric_polytope(3, rng))


def test_json_round_trip_is_bit_exact():
    from logbm.serialize import body_from_json
    P = random_symmetric_polytope(3, np.random.default_rng(5))
    Q = body_from_json(P.to_json())
    assert np.array_equal(P.normals, Q.normals) and np.array_equal(P.offsets, Q.offsets)
