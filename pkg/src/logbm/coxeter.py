"""Finite reflection groups: simple roots, Weyl-chamber generators, root orbits,
the chamber-to-orthant transfer and symmetrization of polytopes.

Simple roots are stored unnormalized; reflections normalize internally, so
only the directions of roots matter.
"""
from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import helmert

from .bodies import (Body, HPolytope, Polytope, as_polytope, halfspace_vertices, hull_volume,
                     unconditional_closure)
from .errors import InvalidParameter, PreconditionViolation, ResourceLimit, Unsupported

GROUP_CAP = 100_000
ORBIT_CAP = 1_000_000
DUALITY_TOL = 1e-10

_S3, _S2 = math.sqrt(3.0), math.sqrt(2.0)


@dataclass(frozen=True)
class RootSystem:
    """Simple roots ``u_i`` (rows) and, when known, chamber generators ``v_i`` (rows)."""

    type: str
    rank: int
    roots: np.ndarray
    generators: np.ndarray | None = None

    @property
    def name(self):
        return self.type if self.type.startswith(("E", "I2")) else f"{self.type}{self.rank}"

    def gram(self):
        """Cross Gram ``<u_i, v_j>``."""
        return self.roots @ self.generators.T

    def check(self, tol=DUALITY_TOL):
        """Evaluate the chamber invariants; returns a dict of booleans and the raw data."""
        G = self.gram()
        d = self.rank
        off = ~np.eye(d, dtype=bool)
        upper = np.triu(np.ones((d, d), dtype=bool), 1)
        norms = np.linalg.norm(self.generators, axis=1)
        VV = self.generators @ self.generators.T
        angle = VV - np.outer(norms, norms) / d
        return {
            "positive_diagonal": bool(np.all(np.diag(G) > tol)),
            "duality_upper": bool(np.all(np.abs(G[upper]) <= tol)),
            "duality_all": bool(np.all(np.abs(G[off]) <= tol)),
            "angle_bound": bool(np.all(angle[off] >= -tol)),
        }


@dataclass
class ReflectionGroupSpec:
    """Reflection group given by generating roots; elements are filled in lazily."""

    roots: np.ndarray
    elements: list | None = field(default=None)

    @property
    def dim(self):
        return self.roots.shape[1]

    def generator_matrices(self):
        return [reflection_matrix(r) for r in self.roots]

    def enumerate(self, cap=GROUP_CAP):
        if self.elements is None:
            self.elements = enumerate_group(self.generator_matrices(), cap)
        return self.elements

    @property
    def order(self):
        return len(self.enumerate())


# ---------------------------------------------------------------------------
# tables


def _parse_type(kind, rank=None):
    s = str(kind).strip().upper().replace(" ", "")
    m = re.fullmatch(r"I2\(?(\d+)\)?", s)
    if m:
        return "I2", int(m.group(1))
    if s in ("I2", "I"):
        if rank is None:
            raise InvalidParameter(f"rank missing for type {kind!r}")
        return "I2", int(rank)
    m = re.fullmatch(r"([A-Z])(\d+)", s)
    if m:
        return m.group(1), int(m.group(2))
    if rank is None:
        raise InvalidParameter(f"rank missing for type {kind!r}")
    return s, int(rank)


def _e(d, i):
    v = np.zeros(d)
    v[i] = 1.0
    return v


def _chain(d):
    return [_e(d, i) - _e(d, i + 1) for i in range(d - 1)]


def _table(kind, rank):
    """Return ``(type, rank, roots, generators)``; ``rank`` is ``m`` for I2."""
    t, r = _parse_type(kind, rank)
    if t in ("F", "H"):
        raise Unsupported(f"type {t}{r} has no shipped chamber data")
    if t == "A":
        if r < 1:
            raise InvalidParameter("A_d needs d >= 1")
        d = r
        H = helmert(d + 1, full=False)          # orthonormal basis of the sum-zero plane
        roots = np.array(_chain(d + 1)) @ H.T
        verts = np.eye(d + 1) - 1.0 / (d + 1)
        gens = np.array([verts[:i].mean(axis=0) for i in range(1, d + 1)]) @ H.T
        return "A", d, roots, gens
    if t == "B":
        if r < 2:
            raise InvalidParameter("B_d needs d >= 2")
        d = r
        std = np.array(_chain(d) + [_e(d, d - 1)])
        roots = np.array([_e(d, d - 1)] + [_e(d, d - j) - _e(d, d - j + 1) for j in range(2, d + 1)])
        gens = np.array([np.r_[np.ones(d - i + 1), np.zeros(i - 1)] for i in range(1, d + 1)])
        return "B", d, roots, gens, std
    if t == "D":
        if r < 4:
            raise InvalidParameter("D_d needs d >= 4")
        d = r
        roots = np.array(_chain(d) + [_e(d, d - 2) + _e(d, d - 1)])
        gens = [np.r_[np.ones(i), np.zeros(d - i)] for i in range(1, d - 1)]
        gens.append(np.r_[np.ones(d - 1), -1.0])
        gens.append(np.ones(d))
        return "D", d, roots, np.array(gens)
    if t == "E" and r == 6:
        roots = np.array(_chain(6)[:4]
                         + [_e(6, 3) + _e(6, 4), np.r_[-np.ones(5), _S3]])
        gens = np.array([
            [_S3, 0, 0, 0, 0, 1],
            [_S3, _S3, 0, 0, 0, 2],
            [_S3, _S3, _S3, 0, 0, 3],
            [1, 1, 1, 1, -1, _S3],
            [1, 1, 1, 1, 1, 5 / _S3],
            [0, 0, 0, 0, 0, 3],
        ])
        return "E6", 6, roots, gens
    if t == "E" and r == 7:
        roots = np.array(_chain(7)[:5] + [_e(7, 4) + _e(7, 5), np.r_[-np.ones(6), _S2]])
        gens = np.array([
            [2, 0, 0, 0, 0, 0, _S2],
            [1, 1, 0, 0, 0, 0, _S2],
            [1, 1, 1, 0, 0, 0, 3 / _S2],
            [1, 1, 1, 1, 0, 0, 2 * _S2],
            [1, 1, 1, 1, 1, -1, 2 * _S2],
            [1, 1, 1, 1, 1, 1, 3 * _S2],
            [0, 0, 0, 0, 0, 0, 4],
        ])
        return "E7", 7, roots, gens
    if t == "E" and r == 8:
        roots = np.array(_chain(8) + [np.r_[-np.ones(5), np.ones(3)]])
        f = -5.0 / 3.0
        gens = np.array([
            [1, -1, -1, -1, -1, -1, -1, -1],
            [0, 0, -1, -1, -1, -1, -1, -1],
            [-1, -1, -1, -3, -3, -3, -3, -3],
            [-1, -1, -1, -1, -2, -2, -2, -2],
            [-1, -1, -1, -1, -1, f, f, f],
            [-1, -1, -1, -1, -1, -1, -2, -2],
            [-1, -1, -1, -1, -1, -1, -1, -3],
            [-1, -1, -1, -1, -1, -1, -1, -1],
        ])
        return "E8", 8, roots, gens
    if t == "I2":
        m = r
        if m < 3:
            raise InvalidParameter("I2(m) needs m >= 3")
        a = math.pi / m
        roots = np.array([[math.sin(a), -math.cos(a)], [0.0, 1.0]])
        gens = np.array([[1.0, 0.0], [math.cos(a) ** 2, math.cos(a) * math.sin(a)]])
        return f"I2({m})", 2, roots, gens
    raise Unsupported(f"unsupported reflection group type {kind!r}")


def simple_roots(kind, rank=None):
    """Simple roots of a finite irreducible type.

    ``kind`` is one of ``A``, ``B``, ``D``, ``E6``, ``E7``, ``E8`` or ``I2(m)``
    (strings such as ``"D4"`` carry the rank). ``B_d`` uses the standard order
    ``e_i - e_{i+1}, e_d``.
    """
    data = _table(kind, rank)
    roots = data[4] if len(data) > 4 else data[2]
    return RootSystem(data[0], data[1], roots)


def chamber_generators(kind, rank=None):
    """Simple roots together with the generators of the matching Weyl chamber.

    For ``A_d`` and ``B_d`` the generators are centroids of a face tower of
    the regular simplex and cube; for ``B_d`` the roots are listed in the
    order dual to that tower (``e_d`` first). ``D_d`` uses
    ``v_{d-1} = e_1 + ... + e_{d-1} - e_d``.
    """
    data = _table(kind, rank)
    return RootSystem(data[0], data[1], data[2], data[3])


def group_order(rs):
    """Order of the Weyl group of a shipped type."""
    t, d = rs.type, rs.rank
    if t == "A":
        return math.factorial(d + 1)
    if t == "B":
        return 2 ** d * math.factorial(d)
    if t == "D":
        return 2 ** (d - 1) * math.factorial(d)
    if t.startswith("I2"):
        return 2 * int(re.search(r"\((\d+)\)", t).group(1))
    return {"E6": 51840, "E7": 2903040, "E8": 696729600}[t]


def shipped_types():
    """Every table covered by the chamber checks."""
    out = [("A", d) for d in range(1, 9)] + [("B", d) for d in range(2, 9)]
    out += [("D", d) for d in range(4, 9)] + [(f"I2({m})", None) for m in range(3, 13)]
    out += [("E6", None), ("E7", None), ("E8", None)]
    return out


# ---------------------------------------------------------------------------
# reflections and orbits


def reflection_matrix(root):
    """Orthogonal reflection ``x -> x - 2 <x, r> r / <r, r>``."""
    r = np.asarray(root, float).ravel()
    rr = float(r @ r)
    if rr == 0.0:
        raise InvalidParameter("zero root")
    return np.eye(len(r)) - 2.0 * np.outer(r, r) / rr


def _key(v, digits=9):
    return tuple(np.round(v, digits) + 0.0)


def enumerate_group(generators, cap=GROUP_CAP):
    """All products of the generator matrices (breadth-first), up to ``cap`` elements."""
    gens = [np.asarray(g, float) for g in generators]
    n = gens[0].shape[0]
    start = np.eye(n)
    seen = {_key(start.ravel()): start}
    queue = deque([start])
    while queue:
        g = queue.popleft()
        for s in gens:
            h = s @ g
            k = _key(h.ravel())
            if k not in seen:
                seen[k] = h
                if len(seen) > cap:
                    raise ResourceLimit(f"group has more than {cap} elements")
                queue.append(h)
    return list(seen.values())


def root_orbit(rs, cap=ORBIT_CAP):
    """All roots (both signs) generated from the simple roots by the simple reflections.

    Roots are returned as unit vectors in breadth-first discovery order.
    """
    roots = np.asarray(rs.roots if isinstance(rs, RootSystem) else rs, float)
    units = roots / np.linalg.norm(roots, axis=1, keepdims=True)
    refl = [reflection_matrix(r) for r in units]
    seen = {}
    queue = deque()
    for u in units:
        for w in (u, -u):
            k = _key(w)
            if k not in seen:
                seen[k] = w
                queue.append(w)
    while queue:
        w = queue.popleft()
        for R in refl:
            x = R @ w
            k = _key(x)
            if k not in seen:
                seen[k] = x
                if len(seen) > cap:
                    raise ResourceLimit(f"root orbit exceeds {cap}")
                queue.append(x)
    return np.array(list(seen.values()))


def vector_orbit(vectors, rs, cap=GROUP_CAP):
    """Orbit of each vector under the reflections through the simple roots."""
    refl = [reflection_matrix(r) for r in np.asarray(rs.roots if isinstance(rs, RootSystem) else rs)]
    out = []
    for v in np.atleast_2d(np.asarray(vectors, float)):
        seen = {_key(v): v}
        queue = deque([v])
        while queue:
            w = queue.popleft()
            for R in refl:
                x = R @ w
                k = _key(x)
                if k not in seen:
                    seen[k] = x
                    if len(seen) > cap:
                        raise ResourceLimit(f"orbit exceeds {cap}")
                    queue.append(x)
        out.append(np.array(list(seen.values())))
    return out


# ---------------------------------------------------------------------------
# chamber transfer


@dataclass(frozen=True)
class ChamberCertificate:
    """``images[:, j] = Phi^{-T} v_j``; the chamber lands in the orthant iff ``min_coordinate >= 0``."""

    images: np.ndarray
    min_coordinate: float

    @property
    def ok(self):
        return self.min_coordinate >= -DUALITY_TOL


def chamber_transfer(generators, tol=1e-12):
    """Linear map ``Phi`` with ``Phi v_i = e_i``, plus the orthant certificate.

    Parameters
    ----------
    generators : array_like, shape (d, d)
        Rows are the chamber generators ``v_i``.

    Raises
    ------
    PreconditionViolation
        When the generators are dependent or two of them form an obtuse angle.
    """
    V = np.atleast_2d(np.asarray(generators.generators if isinstance(generators, RootSystem)
                                 else generators, float))
    d = V.shape[0]
    if V.shape != (d, d):
        raise InvalidParameter("need d generators in R^d")
    gram = V @ V.T
    if np.linalg.matrix_rank(V, tol=1e-10 * max(1.0, np.abs(V).max())) < d:
        raise PreconditionViolation("chamber generators are linearly dependent")
    norms = np.sqrt(np.diag(gram))
    if np.any(gram < -tol * np.outer(norms, norms)):
        raise PreconditionViolation("chamber generators with a negative inner product")
    Phi = np.linalg.inv(V.T)
    images = np.linalg.inv(Phi).T @ V.T
    return Phi, ChamberCertificate(images, float(images.min()))


def _check_invariant(K, roots, tol=1e-8, samples=256, seed=0):
    P = as_polytope(K)
    rng = np.random.default_rng(seed)
    probe = rng.standard_normal((samples, P.dim))
    probe = np.vstack([P.normals, probe / np.linalg.norm(probe, axis=1, keepdims=True)])
    h = P.support(probe)
    for r in roots:
        R = reflection_matrix(r)
        if np.any(np.abs(P.support(probe @ R.T) - h) > tol * np.maximum(1.0, np.abs(h))):
            return False
    return True


def chamber_piece(K, rs):
    """``W ∩ K`` as an H-polytope, for the chamber ``W = {x : <u_i, x> >= 0}``."""
    P = as_polytope(K)
    A = np.vstack([P.normals, -rs.roots])
    b = np.concatenate([P.offsets, np.zeros(rs.rank)])
    w = rs.generators.sum(axis=0)
    interior = 0.25 * w / P.gauge(w)
    return A, b, halfspace_vertices(A, b, interior)


def unconditionalize(K, rs, Phi=None, tol=1e-8):
    """Unconditional body whose orthant part is ``Phi (W ∩ K)``.

    ``K`` must be a polytope invariant under the wall reflections of the
    chamber. Its volume equals ``2^n |det Phi| V(W ∩ K)``.
    """
    if rs.generators is None:
        raise InvalidParameter("root system carries no chamber generators")
    if K.dim != rs.rank:
        raise InvalidParameter("body and root system differ in dimension")
    if not _check_invariant(K, rs.roots, tol):
        raise PreconditionViolation("body is not invariant under the chamber's wall reflections")
    if Phi is None:
        Phi, cert = chamber_transfer(rs.generators)
        if not cert.ok:
            raise PreconditionViolation("chamber does not transfer into the orthant")
    _, _, V = chamber_piece(K, rs)
    Y = V @ np.asarray(Phi, float).T
    scale = max(1.0, float(np.abs(Y).max()))
    Y[np.abs(Y) < 1e-11 * scale] = 0.0
    return unconditional_closure(Y, tol=1e-7)


def chamber_volume(K, rs):
    """Exact ``V(W ∩ K)``."""
    V = chamber_piece(K, rs)[2]
    if V.shape[1] == 1:
        return float(V.max() - V.min())
    return hull_volume(V)


# ---------------------------------------------------------------------------
# symmetrization and decomposition


def symmetrize(K, group, cap=GROUP_CAP):
    """Intersection of the images of a polytope under a reflection group.

    ``group`` is a :class:`ReflectionGroupSpec`, a :class:`RootSystem` or an
    array of generating roots. Halfspace normals are closed under the
    generating reflections; an orbit larger than ``cap`` raises
    :class:`ResourceLimit`.
    """
    roots = group.roots if isinstance(group, (RootSystem, ReflectionGroupSpec)) else np.asarray(group)
    P = as_polytope(K)
    refl = [reflection_matrix(r) for r in roots]
    best = {}
    queue = deque()
    for a, b in zip(P.normals, P.offsets):
        k = _key(a)
        if k not in best or b < best[k][1]:
            best[k] = (a, b)
            queue.append((a, b))
    while queue:
        a, b = queue.popleft()
        for R in refl:
            x = R @ a
            k = _key(x)
            if k not in best or b < best[k][1] - 1e-15:
                best[k] = (x, b)
                queue.append((x, b))
                if len(best) > cap:
                    raise ResourceLimit(f"symmetrization orbit exceeds {cap} halfspaces")
    A = np.array([v[0] for v in best.values()])
    b = np.array([v[1] for v in best.values()])
    return HPolytope(A, b)


def invariant_subspaces(roots, tol=1e-10):
    """Orthonormal bases of the irreducible pieces of a root configuration.

    Roots are grouped into connected components of the non-orthogonality
    graph; the orthogonal complement of their span is returned as
    one-dimensional pieces so that the bases together span the whole space.
    """
    R = np.atleast_2d(np.asarray(roots, float))
    m, n = R.shape
    U = R / np.linalg.norm(R, axis=1, keepdims=True)
    adj = np.abs(U @ U.T) > tol
    comp = -np.ones(m, dtype=int)
    label = 0
    for s in range(m):
        if comp[s] >= 0:
            continue
        stack = [s]
        comp[s] = label
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(adj[i] & (comp < 0)):
                comp[j] = label
                stack.append(j)
        label += 1
    pieces = []
    for c in range(label):
        block = U[comp == c]
        _, sv, vt = np.linalg.svd(block)
        rank = int(np.sum(sv > tol * max(1.0, sv.max())))
        pieces.append(vt[:rank])
    span = np.vstack(pieces)
    _, sv, vt = np.linalg.svd(span, full_matrices=True)
    rank = int(np.sum(sv > tol))
    for row in vt[rank:]:
        pieces.append(row[None, :])
    return pieces


def john_radii(K, subspaces, samples=4096, seed=0):
    """Largest radii ``r_i`` with ``r_i * (unit ball of L_i)`` inside ``K``.

    Exact for polytopes (``min_j b_j / |Q_i a_j|``); other bodies use the
    largest gauge over sampled unit vectors of each subspace.
    """
    radii = []
    rng = np.random.default_rng(seed)
    for Q in subspaces:
        Q = np.atleast_2d(np.asarray(Q, float))
        if isinstance(K, Polytope):
            proj = np.linalg.norm(K.normals @ Q.T, axis=1)
            with np.errstate(divide="ignore"):
                radii.append(float(np.min(K.offsets / proj)))
        else:
            y = rng.standard_normal((samples, Q.shape[0]))
            y /= np.linalg.norm(y, axis=1, keepdims=True)
            radii.append(float(1.0 / K.gauge(y @ Q).max()))
    return radii


def john_normalization(K, subspaces, radii=None):
    """Map scaling each subspace by ``1/r_i``; returns ``(map, inner_ok, outer_ratio)``.

    ``inner_ok`` confirms the unit ball lies in the image; ``outer_ratio``
    is the circumradius of the image (expected at most ``n`` for invariant
    bodies).
    """
    if radii is None:
        radii = john_radii(K, subspaces)
    n = K.dim
    M = sum(np.atleast_2d(Q).T @ np.atleast_2d(Q) / r for Q, r in zip(subspaces, radii))
    image = K.linear_image(M)
    P = as_polytope(image)
    inner = float(np.min(P.offsets)) >= 1.0 - 1e-9
    outer = float(np.max(np.linalg.norm(P.vertices, axis=1)))
    return M, inner, outer
