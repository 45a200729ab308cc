"""Logarithmic sums (Wulff shapes of geometric-mean support functions) and
coordinatewise products of unconditional bodies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import minimize

from . import _gp
from .bodies import (BOUNDARY_TOL, MAX_VERTEX_DIM, Body, DirectSum, HPolytope, Polytope,
                     VPolytope, _batch, _orthant_piece_vertices, _sign_vectors, as_polytope, box_halfwidths, is_symmetric,
                     is_unconditional, make_box)
from .errors import InvalidParameter, PreconditionViolation, Unsupported


@dataclass(frozen=True)
class DiagonalMap:
    """Positive diagonal matrix stored by its entries."""

    entries: tuple

    def __init__(self, entries):
        e = tuple(float(v) for v in np.asarray(entries, float).ravel())
        if not e or any(not (v > 0 and math.isfinite(v)) for v in e):
            raise InvalidParameter("diagonal entries must be positive and finite")
        object.__setattr__(self, "entries", e)

    @property
    def dim(self):
        return len(self.entries)

    @property
    def array(self):
        return np.array(self.entries)

    @property
    def matrix(self):
        return np.diag(self.entries)

    def power(self, eta):
        return DiagonalMap(self.array ** float(eta))

    def inverse(self):
        return self.power(-1.0)

    def apply(self, body):
        return body.linear_image(self.matrix)

    def to_json(self):
        return list(self.entries)


def diag_power(T, eta):
    """Entrywise power ``T**eta`` of a diagonal map."""
    return T.power(eta)


def _check_lambda(lam):
    lam = float(lam)
    if not 0.0 <= lam <= 1.0 or not math.isfinite(lam):
        raise InvalidParameter(f"lambda must lie in [0, 1], got {lam}")
    return lam


# ---------------------------------------------------------------------------
# direction grids


def _fibonacci_sphere(count):
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    r = np.sqrt(1.0 - z * z)
    ang = math.pi * (3.0 - math.sqrt(5.0)) * k
    return np.column_stack([r * np.cos(ang), r * np.sin(ang), z])


def direction_grid(n, size=None):
    """Deterministic, roughly uniform unit directions in ``R^n``.

    Uniform angles for ``n = 2``, a Fibonacci spiral for ``n = 3`` and a
    normalized cube-surface lattice for ``n >= 4``. The axis directions are
    always included.
    """
    if size is None:
        size = {1: 2, 2: 720, 3: 4096}.get(n, 20000)
    eye = np.eye(n)
    if n == 1:
        U = eye
    elif n == 2:
        ang = 2 * math.pi * np.arange(size) / size
        U = np.column_stack([np.cos(ang), np.sin(ang)])
    elif n == 3:
        U = _fibonacci_sphere(size)
    else:
        k = max(2, int(round((size / (2 * n)) ** (1.0 / (n - 1)))))
        ticks = np.linspace(-1.0, 1.0, k)
        mesh = np.stack(np.meshgrid(*([ticks] * (n - 1)), indexing="ij"), -1).reshape(-1, n - 1)
        faces = []
        for axis in range(n):
            for sign in (-1.0, 1.0):
                F = np.insert(mesh, axis, sign, axis=1)
                faces.append(F)
        U = np.unique(np.round(np.vstack(faces), 12), axis=0)
        U /= np.linalg.norm(U, axis=1, keepdims=True)
    return np.vstack([eye, -eye, U])


def _tangent_basis(u):
    # rows orthonormal to each u: (N, n-1, n)
    n = u.shape[1]
    _, _, vt = np.linalg.svd(u[:, None, :])
    return vt[:, 1:, :] if n > 1 else np.zeros((len(u), 0, n))


# ---------------------------------------------------------------------------
# L0 sum


class WulffOracle(Body):
    """Wulff shape of ``f(u) = h_K(u)**(1-lam) * h_C(u)**lam``.

    For polytope generators the shape is itself a polytope cut out by the
    facet normals of ``K + C``: on each cone of the common normal fan both
    support functions are linear, so their geometric mean is concave and
    superadditive and only the extreme rays matter. That polytope is stored
    as ``self.polytope`` and all queries are exact. Other generators use a
    direction grid (the outer polytope) with local refinement.
    """

    kind = "l0sum"

    def __init__(self, K, C, lam, grid=None, refine_top=16):
        if K.dim != C.dim:
            raise InvalidParameter("generators differ in dimension")
        self.K, self.C, self.lam = K, C, float(lam)
        self.dim = K.dim
        self.refine_top = refine_top
        self.polytope = None
        self.grid_size = grid
        hw = box_halfwidths(K) if isinstance(K, Polytope) else None
        hw2 = box_halfwidths(C) if isinstance(C, Polytope) else None
        if hw is not None and hw2 is not None:
            self.polytope = make_box(hw ** (1 - self.lam) * hw2 ** self.lam)
        elif self.dim <= MAX_VERTEX_DIM and _has_polytope(K) and _has_polytope(C):
            PK, PC = as_polytope(K), as_polytope(C)
            normals = minkowski_sum(PK, PC).normals
            self.polytope = HPolytope(normals, self.f(normals))
        if self.polytope is not None:
            self.directions = self.polytope.normals
            self.outer = self.polytope
            self.sandwich_ratio = 1.0
        else:
            self.directions = direction_grid(self.dim, grid)
            self.outer = HPolytope(self.directions, self.f(self.directions))
            g = self._refined_gauge(self.outer.vertices)
            self.sandwich_ratio = float(max(1.0, g.max()))

    @property
    def exact(self):
        return self.polytope is not None

    @property
    def is_polytope(self):
        return self.exact

    @property
    def volume(self):
        if not self.exact:
            raise Unsupported("exact volume needs polytope generators")
        return self.polytope.volume

    @property
    def inner(self):
        return self.outer.scaled(1.0 / self.sandwich_ratio)

    def f(self, u):
        hk = self.K._support(np.atleast_2d(u))
        hc = self.C._support(np.atleast_2d(u))
        return hk ** (1.0 - self.lam) * hc ** self.lam

    def _support(self, u):
        return self.outer._support(u)

    def _refined_gauge(self, x):
        D, fD = self.directions, self.outer.offsets
        ratios = (x @ D.T) / fD
        g = ratios.max(axis=1)
        top = min(self.refine_top, len(D))
        cand_idx = np.argsort(-ratios, axis=1)[:, :top]
        cand = D[cand_idx].reshape(-1, self.dim)
        xs = np.repeat(x, top, axis=0)
        best = ratios[np.arange(len(x))[:, None], cand_idx].reshape(-1)
        step = 0.5 * math.sqrt(4 * math.pi / len(D)) if self.dim > 1 else 0.0
        while step > 1e-7 and self.dim > 1:
            T = _tangent_basis(cand)
            improved = np.zeros(len(cand), dtype=bool)
            for k in range(T.shape[1]):
                for sgn in (-1.0, 1.0):
                    trial = cand + sgn * step * T[:, k, :]
                    trial /= np.linalg.norm(trial, axis=1, keepdims=True)
                    val = np.einsum("ij,ij->i", xs, trial) / self.f(trial)
                    better = val > best
                    cand[better], best[better] = trial[better], val[better]
                    improved |= better
            if not np.any(improved):
                step *= 0.5
        return np.maximum(g, best.reshape(len(x), top).max(axis=1)).clip(min=0.0)

    def _gauge(self, x):
        if self.exact:
            return self.polytope._gauge(x)
        return self._refined_gauge(x)

    def _contains(self, x, tol):
        if self.exact:
            return self.polytope._contains(x, tol)
        return self._gauge(x) <= 1.0 + tol

    def bounding_halfwidths(self):
        return self.outer.bounding_halfwidths()

    def linear_image(self, matrix):
        return WulffOracle(self.K.linear_image(matrix), self.C.linear_image(matrix), self.lam,
                           self.grid_size, self.refine_top)

    def to_json(self):
        return {"kind": "l0sum", "K": self.K.to_json(), "C": self.C.to_json(), "lambda": self.lam}


def _has_polytope(body):
    if isinstance(body, (Polytope, WulffOracle)):
        return body.is_polytope
    return isinstance(body, DirectSum) and body.is_polytope


def minkowski_sum(K, C, alpha=1.0, beta=1.0):
    """Exact ``alpha*K + beta*C`` for polytopes, via pairwise vertex sums."""
    VK = alpha * as_polytope(K).vertices
    VC = beta * as_polytope(C).vertices
    return VPolytope((VK[:, None, :] + VC[None, :, :]).reshape(-1, VK.shape[1]))


def l0_sum(K, C, lam, grid=None):
    """Logarithmic sum ``(1-lam)*K +_0 lam*C`` of origin-symmetric bodies.

    Parameters
    ----------
    K, C : Body
    lam : float
        Weight in ``[0, 1]``; the endpoints return ``K`` or ``C`` unchanged.
    grid : int, optional
        Direction-grid size for generators that are not polytopes.

    Examples
    --------
    >>> from logbm.bodies import make_box
    >>> W = l0_sum(make_box([0.25, 2, 2]), make_box([4, 0.5, 0.5]), 0.5)
    >>> float(W.support([1.0, 0.0, 0.0]))
    1.0
    """
    lam = _check_lambda(lam)
    if K.dim != C.dim:
        raise InvalidParameter("generators differ in dimension")
    for B in (K, C):
        if not is_symmetric(B):
            raise PreconditionViolation("l0_sum needs origin-symmetric bodies")
    if lam == 0.0:
        return K
    if lam == 1.0:
        return C
    return WulffOracle(K, C, lam, grid)


# ---------------------------------------------------------------------------
# coordinatewise product


def _abs_rows(body):
    """Normalized nonnegative rows ``R`` with ``body+ = {y >= 0 : R y <= 1}``."""
    P = as_polytope(body)
    R = np.abs(P.normals) / P.offsets[:, None]
    R = np.unique(np.round(R, 14), axis=0)
    return R


class ProductOracle(Body):
    """Coordinatewise product ``K**(1-lam) * C**lam`` of unconditional polytopes.

    The gauge of ``x`` is ``(min_{c in C+} max_m sum_j KR[m,j] |x_j|**p c_j**-q)**(1-lam)``
    with ``p = 1/(1-lam)`` and ``q = lam/(1-lam)``, solved as a geometric
    program in ``log c``. Coordinates equal to zero are dropped first, which
    restricts the problem to the corresponding coordinate face.
    """

    kind = "product"

    def __init__(self, K, C, lam, gap=1e-11):
        self.K, self.C, self.lam = K, C, float(lam)
        self.dim = K.dim
        self.gap = gap
        self.KR = _abs_rows(K)
        self.CR = _abs_rows(C)
        self.p = 1.0 / (1.0 - self.lam)
        self.q = self.lam / (1.0 - self.lam)
        self._hw = (as_polytope(K).bounding_halfwidths() ** (1 - self.lam)
                    * as_polytope(C).bounding_halfwidths() ** self.lam)

    def bounding_halfwidths(self):
        return self._hw.copy()

    def _log_value_bounds(self, x, decide=None):
        ax = np.abs(x)
        N = len(ax)
        upper = np.full(N, -np.inf)
        lower = np.full(N, -np.inf)
        nz = ax > 0
        patterns, inverse = np.unique(nz, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        for k, pat in enumerate(patterns):
            rows = np.flatnonzero(inverse == k)
            cols = np.flatnonzero(pat)
            if len(cols) == 0:
                continue
            KR = self.KR[:, cols]
            KR = KR[np.any(KR > 0, axis=1)]
            CR = self.CR[:, cols]
            CR = CR[np.any(CR > 0, axis=1)]
            with np.errstate(divide="ignore"):
                logK, logC = np.log(KR), np.log(CR)
            W = self.p * np.log(ax[np.ix_(rows, cols)])
            up, lo = _gp.solve(logK, logC, W, self.q, gap=self.gap, decide=decide)
            upper[rows], lower[rows] = up, lo
        return upper, lower

    def _gauge(self, x):
        upper, _ = self._log_value_bounds(x)
        return np.exp(upper * (1.0 - self.lam))

    def gauge_bounds(self, x):
        """Lower and upper gauge bounds from the solver's duality gap."""
        arr, _ = _batch(x, self.dim)
        upper, lower = self._log_value_bounds(arr)
        return np.exp(lower * (1.0 - self.lam)), np.exp(upper * (1.0 - self.lam))

    @cached_property
    def inner_polytope(self):
        """Sign-flip hull of the products of orthant-piece vertex pairs; inside the product."""
        VK = _orthant_piece_vertices(as_polytope(self.K))
        VC = _orthant_piece_vertices(as_polytope(self.C))
        pts = (VK[:, None, :] ** (1 - self.lam) * VC[None, :, :] ** self.lam).reshape(-1, self.dim)
        flips = _sign_vectors(self.dim)
        return VPolytope(np.unique((pts[:, None, :] * flips[None]).reshape(-1, self.dim), axis=0))

    @cached_property
    def outer_polytope(self):
        """``(1-lam) K + lam C``, which contains the product by the AM-GM inequality."""
        return minkowski_sum(self.K, self.C, 1 - self.lam, self.lam)

    def _contains(self, x, tol):
        out = np.zeros(len(x), dtype=bool)
        unsure = np.all(np.abs(x) <= self._hw + tol, axis=1)
        if self.dim <= MAX_VERTEX_DIM:
            inside = unsure & self.inner_polytope._contains(x, -tol)
            out[inside] = True
            unsure &= ~inside & self.outer_polytope._contains(x, tol)
        idx = np.flatnonzero(unsure)
        if len(idx):
            threshold = self.p * math.log1p(tol)
            upper, _ = self._log_value_bounds(x[idx], decide=threshold)
            out[idx] = upper <= threshold
        return out

    def _support(self, u):
        """Support values by a local concave maximization (approximate)."""
        PK, PC = as_polytope(self.K), as_polytope(self.C)
        n, lam = self.dim, self.lam
        out = np.empty(len(u))
        A = np.block([[self.KR, np.zeros((len(self.KR), n))],
                      [np.zeros((len(self.CR), n)), self.CR]])
        start = np.concatenate([0.5 * PK.bounding_halfwidths() / n, 0.5 * PC.bounding_halfwidths() / n])
        for k, d in enumerate(np.abs(u)):
            def neg(z):
                a, c = np.maximum(z[:n], 1e-300), np.maximum(z[n:], 1e-300)
                return -float(d @ (a ** (1 - lam) * c ** lam))
            res = minimize(neg, start, method="SLSQP", bounds=[(0, None)] * (2 * n),
                           constraints=[{"type": "ineq", "fun": lambda z: 1.0 - A @ z,
                                         "jac": lambda z: -A}],
                           options={"ftol": 1e-12, "maxiter": 500})
            out[k] = -res.fun
        return out

    def linear_image(self, matrix):
        M = np.asarray(matrix, float)
        if not np.allclose(M, np.diag(np.diag(M))) or np.any(np.diag(M) == 0):
            raise Unsupported("products only map under diagonal matrices")
        D = np.abs(np.diag(np.diag(M)))
        return ProductOracle(self.K.linear_image(D), self.C.linear_image(D), self.lam, self.gap)

    def to_json(self):
        return {"kind": "product", "K": self.K.to_json(), "C": self.C.to_json(), "lambda": self.lam}


def coordinatewise_product(K, C, lam, gap=1e-11):
    """Coordinatewise product ``K**(1-lam) * C**lam`` of unconditional polytopes.

    The endpoints ``lam = 0`` and ``lam = 1`` return ``K`` and ``C``; two axis
    boxes give the box of geometric-mean half-widths.
    """
    lam = _check_lambda(lam)
    if K.dim != C.dim:
        raise InvalidParameter("generators differ in dimension")
    for B in (K, C):
        if not is_unconditional(B):
            raise PreconditionViolation("coordinatewise_product needs unconditional bodies")
    if lam == 0.0:
        return K
    if lam == 1.0:
        return C
    hk = box_halfwidths(K) if isinstance(K, Polytope) else None
    hc = box_halfwidths(C) if isinstance(C, Polytope) else None
    if hk is not None and hc is not None:
        return make_box(hk ** (1 - lam) * hc ** lam)
    return ProductOracle(K, C, lam, gap)


# ---------------------------------------------------------------------------
# containment


def boundary_points(body, samples, seed):
    """Radial boundary points along random directions, plus vertices for polytopes."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((samples, body.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    pts = u / body.gauge(u)[:, None]
    exact = body if isinstance(body, Polytope) else getattr(body, "polytope", None)
    if exact is not None and body.dim <= MAX_VERTEX_DIM:
        pts = np.vstack([pts, exact.vertices])
    return pts


def containment_check(inner, outer, samples=2000, seed=0, tol=1e-7):
    """Check ``inner ⊆ outer`` on boundary samples of ``inner``.

    Returns
    -------
    ok : bool
        ``True`` when the worst ratio is at most ``1 + tol``.
    ratio : float
        Largest outer gauge over the sampled boundary points, i.e. the
        dilation of ``outer`` needed to cover them.
    """
    if inner.dim != outer.dim:
        raise InvalidParameter("bodies differ in dimension")
    pts = boundary_points(inner, samples, seed)
    ratio = float(np.max(outer.gauge(pts)))
    return ratio <= 1.0 + tol, ratio
