"""Stability pipeline: diagonal fitting, ratio partitions, decomposition into
direct sums of dilates, and comparison of the measured deviation with the
theoretical bound.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bodies import (Body, DirectSum, HPolytope, Polytope, as_polytope, is_unconditional,
                     linear_image)
from .errors import InvalidParameter, LogBMError, PreconditionViolation
from .logops import DiagonalMap, l0_sum
from .measure import intersection, volume, volume_exact, volume_mc

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def theta(eps, tau, n):
    """Ratio threshold ``8 n^2 eps^(1/(5n)) / tau^(1/5)``."""
    if not 0 < tau <= 0.5:
        raise InvalidParameter("tau must lie in (0, 1/2]")
    if eps < 0:
        raise InvalidParameter("eps must be nonnegative")
    return 8.0 * n * n * eps ** (1.0 / (5 * n)) / tau ** 0.2


def stab_bound(eps, tau, n, c=10.0):
    """``c^n (eps/tau)^(1/(95 n))``."""
    if not 0 < tau <= 0.5:
        raise InvalidParameter("tau must lie in (0, 1/2]")
    return c ** n * (max(eps, 0.0) / tau) ** (1.0 / (95 * n))


def omega_lambda(eps, lam, n, c=10.0):
    """``c^n n^n (eps / min(lam, 1-lam))^(1/19)``."""
    if not 0 < lam < 1:
        raise InvalidParameter("lambda must lie in (0, 1)")
    return c ** n * n ** n * (max(eps, 0.0) / min(lam, 1 - lam)) ** (1.0 / 19)


def bowtie_partition(entries, theta_value):
    """Classes of indices whose entries are chained by ratios within ``exp(±theta)``.

    Returns sorted lists of 0-based indices, ordered by their smallest member.

    Examples
    --------
    >>> bowtie_partition([1, 1.05, 5], 0.1)
    [[0, 1], [2]]
    """
    a = np.asarray(entries, float).ravel()
    if np.any(~(a > 0)):
        raise InvalidParameter("entries must be positive")
    if theta_value < 0:
        raise InvalidParameter("theta must be nonnegative")
    logs = np.log(a)
    order = np.argsort(logs, kind="stable")
    classes, current = [], [int(order[0])]
    for prev, nxt in zip(order[:-1], order[1:]):
        if logs[nxt] - logs[prev] <= theta_value:
            current.append(int(nxt))
        else:
            classes.append(sorted(current))
            current = [int(nxt)]
    classes.append(sorted(current))
    return sorted(classes, key=lambda c: c[0])


def _check_partition(partition, n):
    flat = sorted(i for block in partition for i in block)
    if flat != list(range(n)):
        raise InvalidParameter("blocks must partition {0, ..., n-1}")


# ---------------------------------------------------------------------------
# diagonal fitting


@dataclass(frozen=True)
class DiagonalFit:
    phi: DiagonalMap
    residual: float
    status: str
    evaluations: int


def misfit(K, C, phi, samples=None, seed=0):
    """``V(K Δ Phi^{-1} C) / V(K)``; exact for polytopes, Monte-Carlo otherwise."""
    D = np.diag(1.0 / np.asarray(phi, float))
    PK = as_polytope(K) if K.is_polytope else None
    PC = as_polytope(C) if C.is_polytope else None
    if samples is None and PK is not None and PC is not None:
        img = PC.to_hpolytope().linear_image(D)
        inter = intersection(PK, img).volume
        return (PK.volume + img.volume - 2.0 * inter) / PK.volume
    from .measure import symm_diff_volume
    img = C.linear_image(D)
    est = symm_diff_volume(K, img, samples or 100_000, seed, method="mc")
    return est.value / volume(K, samples or 100_000, seed).value


def _golden(f, a, b, tol):
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def best_diagonal_fit(K, C, samples=None, seed=0, sweeps=3, width=0.5, tol=1e-7):
    """Positive diagonal ``Phi`` making ``Phi K`` as close to ``C`` as possible.

    Minimizes ``V(K Δ Phi^{-1} C) / V(K)`` by coordinate descent over the
    log-entries with a golden-section line search on ``[x - width, x + width]``,
    starting from the axis support ratios ``h_C(e_i) / h_K(e_i)``.

    Returns
    -------
    DiagonalFit
        ``status`` is ``"ok"`` or a failure message; failures are never
        silent.
    """
    n = K.dim
    eye = np.eye(n)
    x = np.log(C.support(eye) / K.support(eye))
    count = [0]

    def obj(v):
        count[0] += 1
        return misfit(K, C, np.exp(v), samples, seed)

    try:
        best = obj(x)
        for _ in range(sweeps):
            for i in range(n):
                def line(t, i=i):
                    y = x.copy()
                    y[i] = t
                    return obj(y)
                t, val = _golden(line, x[i] - width, x[i] + width, tol)
                if val < best:
                    x[i], best = t, val
        if not math.isfinite(best):
            return DiagonalFit(DiagonalMap(np.exp(x)), float("nan"), "failed: non-finite residual", count[0])
        return DiagonalFit(DiagonalMap(np.exp(x)), float(best), "ok", count[0])
    except (LogBMError, np.linalg.LinAlgError, ValueError) as exc:
        return DiagonalFit(DiagonalMap(np.exp(x)), float("nan"), f"failed: {exc}", count[0])


# ---------------------------------------------------------------------------
# sections and dilations


def coordinate_section(K, block):
    """``L_J ∩ K`` expressed in the coordinates of ``J``."""
    P = as_polytope(K)
    block = list(block)
    A = P.normals[:, block]
    keep = np.linalg.norm(A, axis=1) > 1e-12
    return HPolytope(A[keep], P.offsets[keep])


def _vertices(body):
    return as_polytope(body).vertices


def decomposition_delta(K, partition):
    """Smallest ``delta >= 0`` with ``⊕_k (L_{J_k} ∩ K) ⊆ (1 + delta) K``.

    The direct sum's extreme points are sums of section vertices, and the
    gauge of ``K`` is convex, so its maximum over those sums is exact.
    """
    n = K.dim
    _check_partition(partition, n)
    if len(partition) == 1:
        return 0.0
    D = DirectSum([(coordinate_section(K, block), block) for block in partition])
    return max(0.0, float(K.gauge(D.to_polytope().vertices).max()) - 1.0)


def dilate_fit(A, B):
    """Best ``s`` and deviation with ``s A ⊆ B ⊆ (1 + dev) s A``.

    ``s`` is the largest factor with ``s A ⊆ B``; ``1 + dev`` is then the
    smallest further dilation covering ``B``.
    """
    s = 1.0 / float(B.gauge(_vertices(A)).max())
    t = float(A.gauge(_vertices(B)).max())
    return s, max(0.0, t / s - 1.0)


def containment_dilation(inner, outer):
    """Smallest ``t >= 0`` with ``outer ⊆ (1 + t) inner`` (polytopes, via vertices)."""
    return max(0.0, float(inner.gauge(_vertices(outer)).max()) - 1.0)


# ---------------------------------------------------------------------------
# report


@dataclass
class StabilityReport:
    lam: float
    tau: float
    eps: float
    eps_stderr: float
    phi: list
    fit_residual: float
    fit_status: str
    theta: float
    equality_branch: bool
    partition: list
    scales: list
    block_deviation: list
    delta_decomposition: float
    delta_K: float
    delta_C: float
    delta: float
    bound: float
    c: float
    inner_containment: bool
    notes: list = field(default_factory=list)

    @property
    def ratio(self):
        """``delta / eps^(1/(95 n))``, the regression metric for perturbed inputs."""
        n = len(self.phi)
        if self.eps <= 0:
            return float("nan")
        return self.delta / self.eps ** (1.0 / (95 * n))

    def to_json(self):
        out = asdict(self)
        out["ratio"] = self.ratio if math.isfinite(self.ratio) else None
        return out


def _excess(K, C, lam, method, samples, seed):
    W = l0_sum(K, C, lam)
    VK, VC = volume_exact(K), volume_exact(C)
    denom = VK ** (1 - lam) * VC ** lam
    if method == "mc":
        est = volume_mc(W, samples, seed)
        return est.value / denom - 1.0, est.stderr / denom
    return volume_exact(W) / denom - 1.0, 0.0


def stability_report(K, C, lam=0.5, tau=0.5, c=10.0, samples=200_000, seed=0, rs=None,
                     method="exact", rounds=1, theta_floor=1e-3):
    """Measure how far ``K`` and ``C`` are from a direct sum of dilates.

    Parameters
    ----------
    K, C : Body
        Unconditional polytopes, or polytopes invariant under the wall
        reflections of ``rs`` (they are then moved to the orthant first).
    lam, tau : float
        Weight and its margin, ``tau <= lam <= 1 - tau``.
    c : float
        Constant used in the reported bound.
    method : {"exact", "mc"}
        How the volume excess ``eps`` is measured.
    rounds : int
        Number of ``M = K ∩ Phi^{-1} C`` refinement rounds.
    theta_floor : float
        Ratio threshold used when ``eps`` is indistinguishable from zero,
        where the formula for theta collapses.
    """
    if not 0 < lam < 1:
        raise InvalidParameter("lambda must lie in (0, 1)")
    if not 0 < tau <= 0.5 or not tau <= lam <= 1 - tau:
        raise InvalidParameter("need tau in (0, 1/2] and tau <= lambda <= 1 - tau")
    if seed is None:
        raise InvalidParameter("a seed is required")
    notes = []
    if rs is not None:
        from .coxeter import chamber_transfer, unconditionalize
        Phi0, cert = chamber_transfer(rs.generators)
        K, C = unconditionalize(K, rs, Phi0), unconditionalize(C, rs, Phi0)
        notes.append(f"moved to the orthant by the {rs.name} chamber transfer")
    K, C = as_polytope(K), as_polytope(C)
    for B in (K, C):
        if not is_unconditional(B):
            raise PreconditionViolation("stability_report needs unconditional bodies")
    n = K.dim

    eps, sigma = _excess(K, C, lam, method, samples, seed)
    fit = best_diagonal_fit(K, C)
    if fit.status != "ok":
        notes.append(f"diagonal fit {fit.status}")
    phi = fit.phi
    M = K
    for _ in range(max(1, rounds)):
        M = intersection(K, C.to_hpolytope().linear_image(phi.inverse().matrix))
        if rounds > 1:
            refit = best_diagonal_fit(M, C)
            if refit.status == "ok":
                phi = refit.phi

    equality = eps <= max(3.0 * sigma, 1e-9)
    th = theta_floor if equality else max(theta(max(eps, 0.0), tau, n), theta_floor)
    partition = bowtie_partition(phi.array, th)

    sections = [coordinate_section(M, block) for block in partition]
    scales, devs = [], []
    for S, block in zip(sections, partition):
        s, dev = dilate_fit(S, S.linear_image(np.diag(phi.array[block])))
        scales.append(s)
        devs.append(dev)
    d_dec = decomposition_delta(M, partition)
    Ks = [S.scaled(1.0 / (1.0 + d_dec)) for S in sections]
    sumK = DirectSum(list(zip(Ks, partition))).to_polytope()
    sumC = DirectSum([(Kk.scaled(s), b) for Kk, s, b in zip(Ks, scales, partition)]).to_polytope()
    delta_K = containment_dilation(sumK, K)
    delta_C = containment_dilation(sumC, C)
    inner_ok = (float(K.gauge(sumK.vertices).max()) <= 1 + 1e-9
                and float(C.gauge(sumC.vertices).max()) <= 1 + 1e-9)
    return StabilityReport(
        lam=float(lam), tau=float(tau), eps=float(eps), eps_stderr=float(sigma),
        phi=list(phi.entries), fit_residual=fit.residual, fit_status=fit.status,
        theta=float(th), equality_branch=bool(equality), partition=partition,
        scales=[float(s) for s in scales], block_deviation=[float(d) for d in devs],
        delta_decomposition=float(d_dec), delta_K=float(delta_K), delta_C=float(delta_C),
        delta=float(max(delta_K, delta_C)), bound=float(stab_bound(eps, tau, n, c)), c=float(c),
        inner_containment=bool(inner_ok), notes=notes)


# ---------------------------------------------------------------------------
# auxiliary estimates used by the pipeline


def nested_dilation_check(M, K):
    """For nested symmetric polytopes ``M ⊆ K``: measured ``t`` with ``K ⊆ (1+t) M``.

    Returns ``(t, bound, hypothesis)`` with ``bound = 4 (V(K \\ M)/V(M))^(1/n)``
    and ``hypothesis`` true when ``V(K \\ M) <= V(K) / 2^(n+1)``.
    """
    PM, PK = as_polytope(M), as_polytope(K)
    n = PK.dim
    if PK.gauge(PM.vertices).max() > 1 + 1e-9:
        raise PreconditionViolation("M is not contained in K")
    diff = max(PK.volume - PM.volume, 0.0)
    t = containment_dilation(PM, PK)
    return t, 4.0 * (diff / PM.volume) ** (1.0 / n), diff <= PK.volume / 2 ** (n + 1)


def midpoint_excess(phi0, phi_half, phi_lam, phi1, lam):
    """Excesses of a log-concave curve over geometric interpolation.

    Returns ``(eta, mid, allowed)``: ``eta`` is the excess of ``phi(lam)``
    over ``phi0^(1-lam) phi1^lam``, ``mid`` the excess of ``phi(1/2)`` over
    ``sqrt(phi0 phi1)`` and ``allowed = eta / min(lam, 1 - lam)``, which
    bounds ``mid`` for log-concave curves.
    """
    eta = phi_lam / (phi0 ** (1 - lam) * phi1 ** lam) - 1.0
    mid = phi_half / math.sqrt(phi0 * phi1) - 1.0
    return eta, mid, eta / min(lam, 1 - lam)
