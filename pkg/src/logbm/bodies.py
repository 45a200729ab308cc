"""Origin-centred convex bodies with support and membership oracles.

Every body exposes ``support(u)``, ``contains(x)`` and ``gauge(x)``; all three
accept a single vector of shape ``(n,)`` or a batch of shape ``(m, n)``.
Polytopes carry both representations (halfspaces and vertices) once built, so
exact volumes and facet data are available up to dimension ``MAX_VERTEX_DIM``.
"""
from __future__ import annotations

import itertools
import math
from functools import cached_property

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, cKDTree
from scipy.spatial import QhullError

from .errors import InvalidParameter, PreconditionViolation, Unsupported

BOUNDARY_TOL = 1e-9
FACET_TOL = 1e-8
MAX_VERTEX_DIM = 6
# above this, hull triangulations of symmetric bodies get expensive and degenerate
HULL_AREA_DIM = 4


def _batch(v, dim):
    arr = np.asarray(v, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != dim:
        raise InvalidParameter(f"expected vectors of dimension {dim}, got {arr.shape[1]}")
    return arr, single


def _unbatch(values, single):
    return float(values[0]) if single else values


class Body:
    """Base class. Subclasses implement the batched ``_support``/``_gauge``."""

    kind = "body"
    dim: int

    def support(self, u):
        arr, single = _batch(u, self.dim)
        return _unbatch(self._support(arr), single)

    def gauge(self, x):
        arr, single = _batch(x, self.dim)
        return _unbatch(self._gauge(arr), single)

    def contains(self, x, tol=BOUNDARY_TOL):
        arr, single = _batch(x, self.dim)
        inside = self._contains(arr, tol)
        return bool(inside[0]) if single else inside

    def radial(self, u):
        """Radial function: the largest r with r*u in the body."""
        g = self.gauge(u)
        with np.errstate(divide="ignore"):
            return 1.0 / g

    def _contains(self, x, tol):
        return self._gauge(x) <= 1.0 + tol

    def _support(self, u):
        raise Unsupported(f"support is not available for {self.kind}")

    def _gauge(self, x):
        raise Unsupported(f"gauge is not available for {self.kind}")

    def bounding_halfwidths(self):
        """Half-widths of the smallest axis box containing the (symmetric) body."""
        eye = np.eye(self.dim)
        return np.maximum(self._support(eye), self._support(-eye))

    @property
    def is_polytope(self):
        return False

    def linear_image(self, matrix):
        raise Unsupported(f"linear images of {self.kind} bodies are not supported")

    def to_json(self):
        raise Unsupported(f"{self.kind} has no JSON form")


# ---------------------------------------------------------------------------
# polytope machinery


def _normalize_rows(A):
    norms = np.linalg.norm(A, axis=1)
    if np.any(norms == 0):
        raise InvalidParameter("zero halfspace normal")
    # leave already-unit rows untouched so canonical data round-trips bit-exactly
    fix = np.abs(norms - 1.0) > 1e-15
    A = A.copy()
    A[fix] /= norms[fix, None]
    return A, norms


def _merge_duplicates(A, b):
    keys = np.round(A, 11) + 0.0
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    merged_b = np.full(len(first), np.inf)
    np.minimum.at(merged_b, inverse, b)
    return A[first], merged_b


def _lex_order(A):
    return np.lexsort(A.T[::-1])


def _dedup_points(P, tol):
    if len(P) <= 1:
        return P
    tree = cKDTree(P)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    keep = np.ones(len(P), dtype=bool)
    if len(pairs):
        parent = np.arange(len(P))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i, j in pairs:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
        keep = np.array([find(i) == i for i in range(len(P))])
    return P[keep]


def _bounded(A, b):
    """Normals positively span the space iff the dual points surround the origin."""
    n = A.shape[1]
    if n == 1:
        return bool(np.any(A[:, 0] > 0) and np.any(A[:, 0] < 0))
    dual = A / b[:, None]
    if n <= 8 and len(dual) > n:
        try:
            hull = ConvexHull(dual)
        except QhullError:
            return False
        return bool(np.all(hull.equations[:, -1] < -1e-12))
    return False


def halfspace_vertices(A, b, interior=None):
    """Vertices of ``{x : A x <= b}`` (bounded, full-dimensional).

    ``interior`` must be a strictly interior point; the origin is used when the
    offsets are positive.
    """
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    n = A.shape[1]
    if interior is None:
        interior = np.zeros(n)
    if n == 1:
        a = A[:, 0]
        hi = np.min(b[a > 0] / a[a > 0])
        lo = np.max(b[a < 0] / a[a < 0])
        return np.array([[lo], [hi]])
    hs = np.hstack([A, -b[:, None]])
    try:
        pts = HalfspaceIntersection(hs, np.asarray(interior, float)).intersections
    except QhullError as exc:
        raise InvalidParameter(f"halfspace intersection failed: {exc}") from exc
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    scale = max(1.0, float(np.max(np.abs(pts)))) if len(pts) else 1.0
    return _dedup_points(pts, 1e-9 * scale)


def _hyperplane_basis(a):
    _, _, vt = np.linalg.svd(a[None, :])
    return vt[1:]


def _facet_area(points, normal):
    n = len(normal)
    if n == 1:
        return 1.0
    if len(points) < n:
        return 0.0
    proj = points @ _hyperplane_basis(normal).T
    if n == 2:
        return float(np.ptp(proj[:, 0]))
    centred = proj - proj.mean(axis=0)
    if np.linalg.matrix_rank(centred, tol=1e-10 * max(1.0, np.abs(centred).max())) < n - 1:
        return 0.0
    return hull_volume(proj)


def hull_volume(points):
    """Convex-hull volume, retrying with joggled input when Qhull hits a precision error.

    Facets of very symmetric polytopes can be so degenerate that Qhull's
    merging gives up; the joggle perturbs coordinates by about ``1e-11``.
    """
    try:
        return float(ConvexHull(points).volume)
    except QhullError:
        pass
    try:
        return float(ConvexHull(points, qhull_options="QJ").volume)
    except QhullError:
        return 0.0


def _hull_facets(V, A, b):
    """Triangulate the hull of ``V`` and credit each simplex to the row of ``A x <= b`` it lies on.

    Returns ``(owner, areas)`` per simplex, or ``None`` if Qhull fails. The
    owner is the row with the smallest slack at the simplex vertices, so no
    incidence tolerance is involved and tiny facets next to a vertex survive.
    """
    n = V.shape[1]
    try:
        hull = ConvexHull(V)
    except QhullError:
        try:
            hull = ConvexHull(V, qhull_options="QJ")
        except QhullError:
            return None
    P = V[hull.simplices]
    # rows nearly tight at the simplex centroid are the only candidates
    k = min(8, len(b))
    owner = np.empty(len(P), dtype=np.int64)
    step = max(1, 4_000_000 // len(b))
    for start in range(0, len(P), step):
        Q = P[start:start + step]
        cen = np.abs(b[None, :] - Q.mean(axis=1) @ A.T)
        cand = np.argpartition(cen, k - 1, axis=1)[:, :k]
        slack = np.abs(b[cand][:, :, None] - np.einsum("skj,smj->skm", A[cand], Q)).max(axis=2)
        owner[start:start + step] = cand[np.arange(len(Q)), np.argmin(slack, axis=1)]
    # with the unit normal as first row the determinant is the simplex area, well conditioned
    M = np.concatenate([A[owner][:, None, :], P[:, 1:, :] - P[:, :1, :]], axis=1)
    areas = np.abs(np.linalg.det(M)) / math.factorial(n - 1)
    return owner, areas


class Polytope(Body):
    """Convex polytope with the origin in its interior.

    Halfspaces are stored in canonical form: unit normals, one row per facet,
    sorted lexicographically. Vertices are stored for ``dim <= MAX_VERTEX_DIM``.
    """

    kind = "polytope"

    def __init__(self, normals, offsets, vertices=None):
        self.normals = np.asarray(normals, float)
        self.offsets = np.asarray(offsets, float)
        self.dim = self.normals.shape[1]
        self._vertices = None if vertices is None else np.asarray(vertices, float)
        self.normals.setflags(write=False)
        self.offsets.setflags(write=False)

    @property
    def is_polytope(self):
        return True

    @property
    def vertices(self):
        if self._vertices is None:
            if self.dim > MAX_VERTEX_DIM + 2:
                raise Unsupported("vertex enumeration is limited to desk-scale dimensions")
            self._vertices = halfspace_vertices(self.normals, self.offsets)
        return self._vertices

    def _support(self, u):
        if self.dim <= MAX_VERTEX_DIM or self._vertices is not None:
            return np.max(u @ self.vertices.T, axis=1)
        out = np.empty(len(u))
        for k, d in enumerate(u):
            res = linprog(-d, A_ub=self.normals, b_ub=self.offsets, bounds=[(None, None)] * self.dim,
                          method="highs")
            out[k] = -res.fun
        return out

    def _gauge(self, x):
        return np.maximum(np.max(x @ self.normals.T / self.offsets, axis=1), 0.0)

    def _contains(self, x, tol):
        return np.all(x @ self.normals.T <= self.offsets + tol, axis=1)

    def bounding_halfwidths(self):
        if self.dim <= MAX_VERTEX_DIM:
            return np.max(np.abs(self.vertices), axis=0)
        return super().bounding_halfwidths()

    @cached_property
    def incidence(self):
        """Boolean matrix (facets x vertices): vertex lies on the facet hyperplane."""
        V = self.vertices
        slack = self.offsets[:, None] - self.normals @ V.T
        return np.abs(slack) <= FACET_TOL * np.maximum(1.0, np.abs(self.offsets))[:, None]

    @cached_property
    def facet_areas(self):
        V = self.vertices
        if 2 <= self.dim <= HULL_AREA_DIM:
            found = _hull_facets(V, self.normals, self.offsets)
            if found is not None:
                return np.bincount(found[0], weights=found[1], minlength=len(self.offsets))
        return np.array([_facet_area(V[self.incidence[i]], self.normals[i])
                         for i in range(len(self.normals))])

    @cached_property
    def volume(self):
        """Exact volume: sum over facets of the cone volumes h*area/n."""
        return float(np.sum(self.offsets * self.facet_areas) / self.dim)

    def linear_image(self, matrix):
        M = np.asarray(matrix, float)
        _check_invertible(M, self.dim)
        if isinstance(self, VPolytope):
            return VPolytope(self.vertices @ M.T)
        return HPolytope(self.normals @ np.linalg.inv(M), self.offsets)

    def scaled(self, t):
        return self.linear_image(t * np.eye(self.dim))

    def to_hpolytope(self):
        return self if isinstance(self, HPolytope) else HPolytope(self.normals, self.offsets)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, facets={len(self.offsets)})"


class HPolytope(Polytope):
    """Polytope given by halfspaces ``<x, u> <= b`` with every ``b > 0``."""

    kind = "hpoly"

    def __init__(self, normals, offsets):
        A = np.atleast_2d(np.asarray(normals, float))
        b = np.asarray(offsets, float).ravel()
        if A.shape[0] != b.shape[0]:
            raise InvalidParameter("normals and offsets disagree in length")
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
            raise InvalidParameter("non-finite halfspace data")
        if np.any(b <= 0):
            raise InvalidParameter("every offset must be strictly positive (origin interior)")
        A, norms = _normalize_rows(A)
        b = b / np.where(np.abs(norms - 1.0) > 1e-15, norms, 1.0)
        A, b = _merge_duplicates(A, b)
        if not _bounded(A, b):
            raise InvalidParameter("halfspaces do not bound a body")
        n = A.shape[1]
        V = None
        if n <= MAX_VERTEX_DIM:
            V = halfspace_vertices(A, b)
            found = _hull_facets(V, A, b) if 2 <= n <= HULL_AREA_DIM else None
            if found is not None:
                keep = np.bincount(found[0], weights=found[1], minlength=len(b)) > 0
                A, b = A[keep], b[keep]
            elif n > 1:
                slack = b[:, None] - A @ V.T
                inc = np.abs(slack) <= FACET_TOL * np.maximum(1.0, np.abs(b))[:, None]
                keep = np.array([_is_facet(V[row], n) for row in inc])
                # nearly parallel rows can pass through the same vertex set;
                # keep the one that fits those vertices most tightly
                seen = {}
                for i in np.flatnonzero(keep):
                    key = inc[i].tobytes()
                    err = float(np.abs(slack[i, inc[i]]).max())
                    if key in seen:
                        j, err_j = seen[key]
                        keep[i if err >= err_j else j] = False
                        if err < err_j:
                            seen[key] = (i, err)
                    else:
                        seen[key] = (i, err)
                A, b = A[keep], b[keep]
            V = V[_lex_order(V)]
        order = _lex_order(A)
        super().__init__(A[order], b[order], V)

    def to_json(self):
        return {"kind": "hpoly", "normals": self.normals.tolist(), "offsets": self.offsets.tolist()}


def _is_facet(points, n):
    if len(points) < n:
        return False
    centred = points - points[0]
    return np.linalg.matrix_rank(centred, tol=1e-9 * max(1.0, np.abs(points).max())) == n - 1


class VPolytope(Polytope):
    """Convex hull of a point cloud whose interior contains the origin."""

    kind = "vpoly"

    def __init__(self, vertices):
        P = np.atleast_2d(np.asarray(vertices, float))
        n = P.shape[1]
        if n == 1:
            lo, hi = P.min(), P.max()
            if not lo < 0 < hi:
                raise InvalidParameter("origin must be interior")
            super().__init__(np.array([[-1.0], [1.0]]), np.array([-lo, hi]), np.array([[lo], [hi]]))
            return
        try:
            hull = ConvexHull(P)
        except QhullError as exc:
            raise InvalidParameter(f"degenerate vertex set: {exc}") from exc
        V = P[np.sort(hull.vertices)]
        A = hull.equations[:, :-1]
        b = -hull.equations[:, -1]
        scale = max(1.0, float(np.max(np.abs(V))))
        if np.any(b <= 1e-12 * scale):
            raise InvalidParameter("origin must lie in the interior of the hull")
        A, norms = _normalize_rows(A)
        b = b / np.where(np.abs(norms - 1.0) > 1e-15, norms, 1.0)
        A, b = _merge_duplicates(A, b)
        order = _lex_order(A)
        super().__init__(A[order], b[order], V[_lex_order(V)])

    def to_json(self):
        return {"kind": "vpoly", "vertices": self.vertices.tolist()}


def _check_invertible(M, dim):
    if M.shape != (dim, dim):
        raise InvalidParameter(f"matrix must be {dim}x{dim}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if abs(np.linalg.det(M)) <= 1e-12 * scale ** dim:
        raise InvalidParameter("singular linear map")


def same_polytope(P, Q, tol=1e-9):
    """Equality of canonical halfspace forms."""
    P, Q = as_polytope(P), as_polytope(Q)
    if P.dim != Q.dim or P.normals.shape != Q.normals.shape:
        return False
    return bool(np.allclose(P.normals, Q.normals, atol=tol) and np.allclose(P.offsets, Q.offsets, atol=tol))


# ---------------------------------------------------------------------------
# direct sums


class DirectSum(Body):
    """Minkowski sum of bodies living in complementary coordinate subspaces."""

    kind = "directsum"

    def __init__(self, parts):
        parts = [(body, tuple(int(i) for i in idx)) for body, idx in parts]
        if not parts:
            raise InvalidParameter("direct sum needs at least one part")
        flat = [i for _, idx in parts for i in idx]
        n = len(flat)
        if sorted(flat) != list(range(n)):
            raise InvalidParameter("index sets must partition {0, ..., n-1}")
        for body, idx in parts:
            if body.dim != len(idx):
                raise InvalidParameter("part dimension does not match its index set")
        self.parts = parts
        self.dim = n

    def _support(self, u):
        return sum(body._support(u[:, list(idx)]) for body, idx in self.parts)

    def _gauge(self, x):
        return np.max([body._gauge(x[:, list(idx)]) for body, idx in self.parts], axis=0)

    @property
    def is_polytope(self):
        return all(body.is_polytope for body, _ in self.parts)

    @cached_property
    def volume(self):
        vols = []
        for body, _ in self.parts:
            if not hasattr(body, "volume"):
                raise Unsupported("direct-sum volume needs exact part volumes")
            vols.append(body.volume)
        return float(np.prod(vols))

    def to_polytope(self):
        if not self.is_polytope:
            raise Unsupported("direct sum of non-polytopes")
        pieces = []
        for body, idx in self.parts:
            P = as_polytope(body)
            emb = np.zeros((len(P.vertices), self.dim))
            emb[:, list(idx)] = P.vertices
            pieces.append(emb)
        pts = pieces[0]
        for emb in pieces[1:]:
            pts = (pts[:, None, :] + emb[None, :, :]).reshape(-1, self.dim)
        return VPolytope(pts)

    def linear_image(self, matrix):
        return self.to_polytope().linear_image(matrix)

    def to_json(self):
        return {"kind": "directsum",
                "parts": [{"body": body.to_json(), "indices": list(idx)} for body, idx in self.parts]}


def as_polytope(body):
    """Return ``body`` as a :class:`Polytope` when it is polyhedral."""
    if isinstance(body, Polytope):
        return body
    if isinstance(body, DirectSum):
        return body.to_polytope()
    exact = getattr(body, "polytope", None)
    if exact is not None:
        return exact
    raise Unsupported(f"{body.kind} is not a polytope")


# ---------------------------------------------------------------------------
# constructors


def make_box(halfwidths):
    """Axis box ``prod [-a_i, a_i]``.

    Examples
    --------
    >>> make_box([1, 1]).volume
    4.0
    """
    a = np.asarray(halfwidths, float).ravel()
    if a.size == 0 or np.any(~(a > 0)):
        raise InvalidParameter("box half-widths must be positive")
    n = a.size
    eye = np.eye(n)
    return HPolytope(np.vstack([eye, -eye]), np.concatenate([a, a]))


def make_cross(scales):
    """Cross-polytope ``conv{±s_i e_i}``; volume ``2^n prod(s) / n!``."""
    s = np.asarray(scales, float).ravel()
    if s.size == 0 or np.any(~(s > 0)):
        raise InvalidParameter("cross-polytope scales must be positive")
    n = s.size
    eye = np.diag(s)
    return VPolytope(np.vstack([eye, -eye]))


def make_segment(halfwidth):
    return make_box([halfwidth])


def box_halfwidths(body, tol=1e-10):
    """Half-widths if ``body`` is an axis box, else ``None``."""
    if not isinstance(body, Polytope):
        return None
    n = body.dim
    if len(body.offsets) != 2 * n:
        return None
    A = body.normals
    if not np.all(np.isclose(np.abs(A).max(axis=1), 1.0, atol=tol)):
        return None
    if not np.allclose(np.sort(np.abs(A), axis=1)[:, :-1], 0.0, atol=tol):
        return None
    hw = body.bounding_halfwidths()
    if not np.allclose(body.support(-np.eye(n)), hw, rtol=tol, atol=tol):
        return None
    return hw


def cut_corners(box, depth):
    """Intersect an axis box with ``<x, sigma> <= sum(a) - depth`` for every sign vector."""
    a = box_halfwidths(box)
    if a is None:
        raise InvalidParameter("cut_corners expects an axis box")
    depth = float(depth)
    if not 0 < depth <= a.min():
        raise InvalidParameter(f"depth must lie in (0, {a.min()}]")
    n = len(a)
    signs = np.array(list(itertools.product([-1.0, 1.0], repeat=n)))
    A = np.vstack([box.normals, signs / math.sqrt(n)])
    b = np.concatenate([box.offsets, np.full(len(signs), (a.sum() - depth) / math.sqrt(n))])
    return HPolytope(A, b)


def direct_sum(parts):
    """Direct sum of ``(body, indices)`` pairs whose index sets partition ``range(n)``."""
    return DirectSum(parts)


def support(body, u):
    return body.support(u)


def contains(body, x, tol=BOUNDARY_TOL):
    return body.contains(x, tol)


def linear_image(body, matrix):
    """Image ``A K``; its support function is ``h_K(A^T u)``."""
    return body.linear_image(np.asarray(matrix, float))


# ---------------------------------------------------------------------------
# symmetry tests


def _sign_vectors(n):
    return np.array(list(itertools.product([1.0, -1.0], repeat=n)))


def _probe_directions(body, rng, count):
    u = rng.standard_normal((count, body.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    if isinstance(body, Polytope):
        u = np.vstack([u, body.normals])
    return u


def is_symmetric(body, samples=256, seed=0, tol=1e-9):
    """Origin symmetry, checked as ``h(u) = h(-u)`` on probe directions."""
    if isinstance(body, Polytope):
        u = body.normals
    else:
        u = _probe_directions(body, np.random.default_rng(seed), samples)
    h1, h2 = body.support(u), body.support(-u)
    return bool(np.all(np.abs(h1 - h2) <= tol * np.maximum(1.0, np.abs(h1))))


def is_unconditional(body, samples=256, seed=0, tol=1e-9):
    """Invariance under every coordinate sign flip, checked on probe directions."""
    rng = np.random.default_rng(seed)
    if isinstance(body, Polytope) and body.dim <= MAX_VERTEX_DIM:
        u = body.normals
        h = body.support(u)
        for s in _sign_vectors(body.dim)[1:]:
            if np.any(np.abs(body.support(u * s) - h) > tol * np.maximum(1.0, h)):
                return False
        return True
    x = rng.uniform(-1, 1, (samples, body.dim)) * body.bounding_halfwidths()
    base = body.contains(x)
    for s in _sign_vectors(body.dim)[1:]:
        if np.any(body.contains(x * s) != base):
            return False
    return True


# ---------------------------------------------------------------------------
# unconditional closure


def _orthant_piece_vertices(P):
    n = P.dim
    A = np.vstack([P.normals, -np.eye(n)])
    b = np.concatenate([P.offsets, np.zeros(n)])
    diag = np.ones(n) / math.sqrt(n)
    interior = 0.5 * diag / max(P.gauge(diag), 1e-300)
    interior = interior * 0.5
    V = halfspace_vertices(A, b, interior)
    scale = max(1.0, float(np.abs(V).max()))
    V[V < 1e-12 * scale] = 0.0
    return V


def unconditional_closure(body, tol=1e-9):
    """Unconditional body whose positive-orthant part equals that of ``body``.

    ``body`` may also be given directly as the vertex array of a piece lying in
    the closed positive orthant. The piece must be down-closed: with every point
    ``x`` it contains the whole box ``[0, x]``.
    """
    if isinstance(body, Body):
        V = _orthant_piece_vertices(as_polytope(body))
    else:
        V = np.atleast_2d(np.asarray(body, float))
        if np.any(V < -tol):
            raise InvalidParameter("orthant piece must lie in the nonnegative orthant")
        V = np.maximum(V, 0.0)
    n = V.shape[1]
    scale = max(1.0, float(np.abs(V).max()))
    pts = np.vstack([V, np.zeros((1, n))])
    if n == 1:
        lo, hi = 0.0, float(V.max())
        return make_segment(hi)
    hull = ConvexHull(pts)
    masks = np.array(list(itertools.product([0.0, 1.0], repeat=n)))
    zeroed = (V[:, None, :] * masks[None, :, :]).reshape(-1, n)
    viol = np.max(zeroed @ hull.equations[:, :-1].T + hull.equations[:, -1], axis=1)
    worst = float(viol.max())
    if worst > tol * scale:
        raise PreconditionViolation(f"orthant piece is not down-closed (violation {worst:.3g})")
    flips = _sign_vectors(n)
    cloud = (V[:, None, :] * flips[None, :, :]).reshape(-1, n)
    return VPolytope(_dedup_points(cloud, 1e-12 * scale))


# ---------------------------------------------------------------------------
# random test bodies


def random_unconditional_polytope(n, rng, n_facets=None, spread=0.3):
    """Random unconditional H-polytope: sign-flip orbits of positive normals plus axis facets."""
    rng = np.random.default_rng(rng)
    m = n_facets if n_facets is not None else n + 1
    flips = _sign_vectors(n)
    while True:
        normals = np.abs(rng.standard_normal((m, n))) + 0.05
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        offsets = rng.uniform(1 - spread, 1 + spread, m)
        axis_off = rng.uniform(1 - spread, 1 + spread, n) * 1.2
        A = np.vstack([(normals[:, None, :] * flips[None, :, :]).reshape(-1, n),
                       np.eye(n), -np.eye(n)])
        b = np.concatenate([np.repeat(offsets, len(flips)), axis_off, axis_off])
        P = HPolytope(A, b)
        if len(P.offsets) > 2 * n:
            return P


def random_symmetric_polytope(n, rng, n_pairs=None, spread=0.3):
    """Random origin-symmetric H-polytope with ``n_pairs`` facet pairs."""
    rng = np.random.default_rng(rng)
    m = n_pairs if n_pairs is not None else 2 * n + 1
    while True:
        normals = rng.standard_normal((m, n))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        offsets = rng.uniform(1 - spread, 1 + spread, m)
        A = np.vstack([normals, -normals])
        b = np.concatenate([offsets, offsets])
        try:
            return HPolytope(A, b)
        except InvalidParameter:
            continue
