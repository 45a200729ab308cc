"""Batched barrier-Newton solver for the coordinatewise-product gauge.

For a point ``x`` with positive coordinates the product gauge reduces to the
geometric program

    minimize   max_m  sum_j KR[m, j] * x_j**p * c_j**(-q)
    subject to CR @ c <= 1,  c > 0

which is convex in ``t = log c``. We minimize ``s`` subject to
``phi_m(t) <= s`` and ``psi_i(t) <= 0`` with a log barrier, for many points at
once. ``phi`` and ``psi`` are log-sum-exp functions, so gradients and Hessians
come from softmax weights.
"""
from __future__ import annotations

import numpy as np

_NEG = -np.inf


def _lse(Z):
    """Log-sum-exp over the last axis plus the softmax weights."""
    zmax = np.max(Z, axis=-1, keepdims=True)
    E = np.exp(Z - zmax)
    S = E.sum(axis=-1, keepdims=True)
    return (zmax + np.log(S))[..., 0], E / S


def _evaluate(logK, logC, W, q, t, s):
    # phi: (N, mK); piK: (N, mK, n)
    phi, piK = _lse(logK[None, :, :] + W[:, None, :] - q * t[:, None, :])
    psi, piC = _lse(logC[None, :, :] + t[:, None, :])
    return phi, piK, psi, piC


def _barrier(tau, s, s_ref, phi, psi):
    # tau * (s - s_ref) keeps the linear term small at large tau
    gk = s[:, None] - phi
    gc = -psi
    bad = np.any(gk <= 0, axis=1) | np.any(gc <= 0, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = tau * (s - s_ref) - np.log(gk).sum(axis=1) - np.log(gc).sum(axis=1)
    val[bad] = np.inf
    return val


def _newton_direction(tau, q, s, phi, piK, psi, piC):
    N, mK, n = piK.shape
    gk = s[:, None] - phi          # > 0
    gc = -psi                      # > 0
    # constraint phi_m - s <= 0: gradient (-q pi, -1)
    grad = np.zeros((N, n + 1))
    hess = np.zeros((N, n + 1, n + 1))
    wk = 1.0 / gk
    grad[:, :n] += np.einsum("km,kmj->kj", wk, -q * piK)
    grad[:, n] += -wk.sum(axis=1)
    dk = np.concatenate([-q * piK, -np.ones((N, mK, 1))], axis=2)
    hess += np.einsum("km,kmi,kmj->kij", wk ** 2, dk, dk)
    curv = np.einsum("km,kmj->kj", wk, piK)
    hess[:, :n, :n] += q * q * (np.einsum("kj,ij->kij", curv, np.eye(n))
                                - np.einsum("km,kmi,kmj->kij", wk, piK, piK))
    wc = 1.0 / gc
    grad[:, :n] += np.einsum("km,kmj->kj", wc, piC)
    hess[:, :n, :n] += np.einsum("km,kmi,kmj->kij", wc ** 2, piC, piC)
    curvc = np.einsum("km,kmj->kj", wc, piC)
    hess[:, :n, :n] += (np.einsum("kj,ij->kij", curvc, np.eye(n))
                        - np.einsum("km,kmi,kmj->kij", wc, piC, piC))
    grad[:, n] += tau
    hess += 1e-14 * np.eye(n + 1)
    step = -np.linalg.solve(hess, grad[..., None])[..., 0]
    decrement = -np.einsum("ki,ki->k", grad, step)
    return step, decrement


def solve(logK, logC, W, q, *, gap=1e-11, decide=None, max_newton=60):
    """Optimal log-value ``s*`` for each row of ``W`` (``W = p * log|x|``).

    Parameters
    ----------
    logK, logC : ndarray
        Entrywise logs of the normalized absolute constraint rows of ``K+``
        and ``C+``; ``-inf`` marks zero entries.
    W : ndarray, shape (N, n)
    q : float
    gap : float
        Target duality gap in ``s``.
    decide : float, optional
        When given, a point stops as soon as its upper bound is ``<= decide``
        or its lower bound is ``> decide``.

    Returns
    -------
    upper, lower : ndarray
        Bounds bracketing ``s*`` for each point.
    """
    N, n = W.shape
    mK, mC = logK.shape[0], logC.shape[0]
    c0 = 0.5 / np.max(np.exp(logC).sum(axis=1))
    t = np.full((N, n), np.log(c0))
    phi, _, _, _ = _evaluate(logK, logC, W, q, t, np.zeros(N))
    s = phi.max(axis=1) + 1.0
    upper = phi.max(axis=1)
    lower = np.full(N, -np.inf)
    active = np.ones(N, dtype=bool)
    tau = max(1.0, (mK + mC) / max(1.0, float(np.max(np.abs(s)))))
    m_total = mK + mC
    while np.any(active):
        idx = np.flatnonzero(active)
        ti, si = t[idx], s[idx]
        centring = np.ones(len(idx), dtype=bool)
        for _ in range(max_newton):
            live = np.flatnonzero(centring)
            if len(live) == 0:
                break
            Wl, tl, sl = W[idx[live]], ti[live], si[live]
            phi, piK, psi, piC = _evaluate(logK, logC, Wl, q, tl, sl)
            step, dec = _newton_direction(tau, q, sl, phi, piK, psi, piC)
            f0 = _barrier(tau, sl, sl, phi, psi)
            alpha = np.ones(len(live))
            pending = np.ones(len(live), dtype=bool)
            for _ in range(60):
                pi = np.flatnonzero(pending)
                if len(pi) == 0:
                    break
                tn = tl[pi] + alpha[pi, None] * step[pi, :n]
                sn = sl[pi] + alpha[pi] * step[pi, n]
                phin, _, psin, _ = _evaluate(logK, logC, Wl[pi], q, tn, sn)
                fn = _barrier(tau, sn, sl[pi], phin, psin)
                ok = fn <= f0[pi] - 0.25 * alpha[pi] * dec[pi] + 1e-13 * np.abs(f0[pi])
                pending[pi[ok]] = False
                alpha[pi[~ok]] *= 0.5
            alpha[pending] = 0.0
            ti[live] = tl + alpha[:, None] * step[:, :n]
            si[live] = sl + alpha * step[:, n]
            moved = alpha * np.abs(step).max(axis=1)
            centring[live[(dec < 1e-6) | (moved < 1e-14)]] = False
        phi, _, _, _ = _evaluate(logK, logC, W[idx], q, ti, si)
        t[idx], s[idx] = ti, si
        upper[idx] = np.minimum(upper[idx], phi.max(axis=1))
        lower[idx] = np.maximum(lower[idx], si - 2.0 * m_total / tau)
        done = upper[idx] - lower[idx] <= gap
        if decide is not None:
            done |= (upper[idx] <= decide) | (lower[idx] > decide)
        active[idx[done]] = False
        tau *= 10.0
        if tau > 1e16:
            break
    return upper, lower
