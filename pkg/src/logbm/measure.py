"""Volumes, facet measures and the inequality-gap functionals.

Exact quantities are used whenever a body has a polytope form; everything
else goes through the seeded Monte-Carlo estimator :func:`volume_mc`.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bodies import Body, DirectSum, HPolytope, Polytope, as_polytope
from .errors import InvalidParameter, Unsupported
from .logops import WulffOracle, l0_sum, minkowski_sum

BLOCK = 1 << 14


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    samples: int
    seed: int | None

    def within(self, target, k=3.0, floor=0.0):
        """``|value - target| <= k*stderr`` (plus an optional absolute floor)."""
        return abs(self.value - target) <= k * self.stderr + floor


@dataclass(frozen=True)
class SurfaceAreaMeasure:
    normals: np.ndarray
    areas: np.ndarray

    @property
    def closure_defect(self):
        return float(np.linalg.norm(self.areas @ self.normals))


@dataclass(frozen=True)
class ConeVolumeMeasure:
    normals: np.ndarray
    masses: np.ndarray

    @property
    def total(self):
        return float(self.masses.sum())


@dataclass(frozen=True)
class PhiDerivative:
    """Finite-difference and facet-formula values of the log-volume derivative at 0.

    ``finite_difference`` and ``facet_formula`` are scaled by ``V(K)``; the
    ``normalized_*`` fields divide that factor out.
    """

    finite_difference: float
    facet_formula: float
    normalized_fd: float
    normalized_formula: float
    stderr: float


def _threads():
    try:
        return max(1, int(os.environ.get("LOGBM_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# volumes


def exact_polytope(body):
    """Polytope form of ``body`` if one is available, else ``None``."""
    if isinstance(body, Polytope):
        return body
    if isinstance(body, WulffOracle):
        return body.polytope
    if isinstance(body, DirectSum) and body.is_polytope and body.dim <= 6:
        return body.to_polytope()
    return None


def volume_exact(P):
    """Exact volume of a polytope (fan of facet cones from the origin)."""
    if isinstance(P, DirectSum):
        return P.volume
    exact = exact_polytope(P)
    if exact is None:
        raise Unsupported(f"no exact volume for {P.kind} bodies")
    if exact.dim > 6:
        raise Unsupported("exact volume is limited to dimension 6")
    return exact.volume


def _hit_block(body, lo, hi, envelope, seed, count):
    rng = np.random.default_rng(seed)
    x = rng.uniform(lo, hi, size=(count, len(lo)))
    if envelope is not None:
        x = x[envelope.contains(x, 0.0)]
    return body.contains(x)


def volume_mc(body, samples=100_000, seed=0, envelope=None, block=BLOCK):
    """Hit-or-miss volume estimate.

    Samples are drawn uniformly in the axis bounding box, or inside
    ``envelope`` (a polytope containing the body) by rejection from its box;
    ``samples`` then counts the draws that land in the envelope. Work is
    split into fixed blocks; block ``k`` uses seed ``seed + k``, so the
    estimate does not depend on how many worker threads run
    (``LOGBM_THREADS``).

    Returns
    -------
    MCEstimate
        ``stderr`` is the sample standard deviation of the per-sample
        volume contributions divided by ``sqrt(samples)``.
    """
    if seed is None:
        raise InvalidParameter("a seed is required for Monte-Carlo estimates")
    samples = int(samples)
    if samples < 2:
        raise InvalidParameter("need at least two samples")
    region = envelope if envelope is not None else body
    hw = np.asarray(region.bounding_halfwidths(), float)
    lo, hi = -hw, hw
    base = float(np.prod(2 * hw)) if envelope is None else volume_exact(envelope)
    if envelope is None:
        size = block
    else:
        # size blocks by the envelope's share of its box
        share = base / float(np.prod(2 * hw))
        size = max(block, int(block / max(share, 1e-3)))
    threads = _threads()
    hits, n, k = 0, 0, 0
    with ThreadPoolExecutor(threads) if threads > 1 else _Inline() as pool:
        while n < samples:
            batch = list(range(k, k + threads))
            k += threads
            for res in pool.map(lambda j: _hit_block(body, lo, hi, envelope, seed + j, size), batch):
                res = res[:samples - n]
                hits += int(np.count_nonzero(res))
                n += len(res)
                if n >= samples:
                    break
            if k > 1000 * threads and n == 0:
                raise InvalidParameter("envelope rejected every sample")
    p = hits / n
    std = base * math.sqrt(p * (1 - p) * n / (n - 1))
    return MCEstimate(base * p, std / math.sqrt(n), n, seed)


class _Inline:
    """Serial stand-in for an executor."""

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    @staticmethod
    def map(func, items):
        return map(func, items)


def volume(body, samples=100_000, seed=0):
    """Exact volume when a polytope form exists (stderr 0), otherwise Monte-Carlo."""
    try:
        return MCEstimate(volume_exact(body), 0.0, 0, seed)
    except Unsupported:
        return volume_mc(body, samples, seed)


def intersection(A, B):
    """Intersection of two polytopes as an H-polytope."""
    PA, PB = as_polytope(A), as_polytope(B)
    return HPolytope(np.vstack([PA.normals, PB.normals]), np.concatenate([PA.offsets, PB.offsets]))


def symm_diff_volume(A, B, samples=100_000, seed=0, method="auto"):
    """Volume of the symmetric difference ``A Δ B``.

    ``method="exact"`` (or ``"auto"`` with two polytopes) uses
    ``V(A) + V(B) - 2 V(A ∩ B)``; otherwise hit-or-miss sampling in the
    common bounding box.
    """
    if A.dim != B.dim:
        raise InvalidParameter("bodies differ in dimension")
    PA, PB = exact_polytope(A), exact_polytope(B)
    if method == "exact" or (method == "auto" and PA is not None and PB is not None):
        if PA is None or PB is None:
            raise Unsupported("exact symmetric difference needs polytopes")
        v = PA.volume + PB.volume - 2.0 * intersection(PA, PB).volume
        return MCEstimate(max(v, 0.0), 0.0, 0, seed)
    hw = np.maximum(A.bounding_halfwidths(), B.bounding_halfwidths())
    base = float(np.prod(2 * hw))
    rng = np.random.default_rng(seed)
    x = rng.uniform(-hw, hw, size=(int(samples), A.dim))
    hit = A.contains(x) ^ B.contains(x)
    p = hit.mean()
    n = len(x)
    return MCEstimate(base * p, base * math.sqrt(p * (1 - p) / (n - 1)), n, seed)


def homothetic_distance(K, C, samples=100_000, seed=0):
    """Symmetric-difference distance of the volume-normalized bodies.

    The translation is fixed at the origin. Returns ``(A, sigma)`` where
    ``sigma = max(V(C)/V(K), V(K)/V(C))``.
    """
    n = K.dim
    VK, VC = volume(K, samples, seed).value, volume(C, samples, seed).value
    a, b = VK ** (-1.0 / n), VC ** (-1.0 / n)
    d = symm_diff_volume(K.linear_image(a * np.eye(n)), C.linear_image(b * np.eye(n)), samples, seed)
    return d.value, max(VC / VK, VK / VC)


# ---------------------------------------------------------------------------
# facet measures


def surface_area_measure(P):
    Q = exact_polytope(P)
    if Q is None:
        raise Unsupported("surface area measure needs a polytope")
    return SurfaceAreaMeasure(Q.normals.copy(), Q.facet_areas.copy())


def cone_volume_measure(P):
    """Facet masses ``h(u) * area / n``; they sum to the volume."""
    Q = exact_polytope(P)
    if Q is None:
        raise Unsupported("cone volume measure needs a polytope")
    return ConeVolumeMeasure(Q.normals.copy(), Q.offsets * Q.facet_areas / Q.dim)


def _support_ratio_log(K, C):
    Q = exact_polytope(K)
    if Q is None:
        raise Unsupported("K must be a polytope")
    hk = Q.offsets
    hc = C.support(Q.normals)
    if np.any(hc <= 0):
        raise InvalidParameter("support value of C vanishes at a facet normal of K")
    return Q, np.log(hc / hk)


def log_minkowski_gap(K, C, samples=100_000, seed=0):
    """``∫ log(h_C/h_K) dV̄_K - (1/n) log(V(C)/V(K))`` with ``V̄_K`` normalized."""
    Q, lr = _support_ratio_log(K, C)
    cv = cone_volume_measure(Q)
    VK = cv.total
    VC = volume(C, samples, seed).value
    return float(lr @ cv.masses / VK - math.log(VC / VK) / Q.dim)


def minkowski_gap(K, C, samples=100_000, seed=0):
    """``∫ h_C dS_K - ∫ h_K dS_K`` after scaling ``C`` to the volume of ``K``."""
    Q = exact_polytope(K)
    if Q is None:
        raise Unsupported("K must be a polytope")
    VK = Q.volume
    VC = volume(C, samples, seed).value
    scale = (VK / VC) ** (1.0 / Q.dim)
    S = surface_area_measure(Q)
    return float(S.areas @ (scale * C.support(S.normals) - Q.offsets))


def bm_gap(K, C, alpha=0.5, beta=0.5):
    """``V(aK + bC)^(1/n) - a V(K)^(1/n) - b V(C)^(1/n)`` for polytopes."""
    n = K.dim
    S = minkowski_sum(K, C, alpha, beta)
    return float(S.volume ** (1 / n) - alpha * volume_exact(K) ** (1 / n)
                 - beta * volume_exact(C) ** (1 / n))


# ---------------------------------------------------------------------------
# the volume curve t -> V((1-t) K +_0 t C)


def phi_curve(K, C, grid, samples=100_000, seed=0):
    """Volumes along the logarithmic interpolation, as ``(t, value, stderr)`` rows."""
    rows = []
    for t in grid:
        est = volume(l0_sum(K, C, float(t)), samples, seed)
        rows.append((float(t), est.value, est.stderr))
    return rows


def phi_prime_zero(K, C, h=1e-3, samples=100_000, seed=0):
    """Compare the derivative of the log-volume curve at 0 with the facet formula.

    The finite difference is Richardson-extrapolated from steps ``h`` and
    ``h/2``. The facet formula is ``n * sum_u log(h_C(u)/h_K(u)) V_K(u)``.
    """
    Q, lr = _support_ratio_log(K, C)
    cv = cone_volume_measure(Q)
    VK = cv.total
    n = Q.dim
    e0 = volume(K, samples, seed)
    e1 = volume(l0_sum(K, C, h), samples, seed)
    e2 = volume(l0_sum(K, C, h / 2), samples, seed)
    d1 = (math.log(e1.value) - math.log(e0.value)) / h
    d2 = (math.log(e2.value) - math.log(e0.value)) / (h / 2)
    fd = 2.0 * d2 - d1
    # delta-method error of the extrapolated log-ratio
    rel = [e.stderr / e.value for e in (e0, e1, e2)]
    err = math.sqrt((4 / h * rel[2]) ** 2 + (1 / h * rel[1]) ** 2 + (3 / h * rel[0]) ** 2)
    formula = n * float(lr @ cv.masses)
    return PhiDerivative(fd * VK, formula, fd, formula / VK, err)
