"""Grid densities, the sup-convolution ``h(z) = sup f(x)^(1-lam) g(y)^lam`` and the
Prékopa-Leindler excess and stability distance.

Densities hold cell-centred values on an axis-aligned box; integrals are
midpoint Riemann sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial import ConvexHull

from .errors import InvalidParameter

CHUNK = 1 << 22
# stand-in for log(0) that keeps interpolation weights finite
LOG_FLOOR = 1e300


@dataclass(frozen=True)
class GridDensity:
    lo: np.ndarray
    hi: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, float))
        hi = np.atleast_1d(np.asarray(self.hi, float))
        vals = np.asarray(self.values, float)
        if vals.ndim != len(lo) or len(lo) != len(hi):
            raise InvalidParameter("domain and value array disagree in dimension")
        if np.any(hi <= lo):
            raise InvalidParameter("empty domain")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise InvalidParameter("density values must be finite and nonnegative")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self):
        return self.values.ndim

    @property
    def resolution(self):
        return self.values.shape

    @property
    def cell(self):
        return (self.hi - self.lo) / np.array(self.values.shape)

    def axes(self):
        return [self.lo[k] + (np.arange(m) + 0.5) * self.cell[k] for k, m in enumerate(self.values.shape)]

    def centers(self):
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    @property
    def mass(self):
        return float(self.values.sum() * np.prod(self.cell))

    def normalized(self):
        m = self.mass
        if m <= 0:
            raise InvalidParameter("zero mass")
        return GridDensity(self.lo, self.hi, self.values / m)

    def evaluate(self, points):
        """Piecewise-linear interpolation between cell centres; zero outside the domain."""
        interp = RegularGridInterpolator(self.axes(), self.values, bounds_error=False, fill_value=0.0)
        return interp(np.asarray(points, float).reshape(-1, self.dim))

    def to_json(self):
        return {"domain": [self.lo.tolist(), self.hi.tolist()],
                "resolution": list(self.values.shape), "values": self.values.ravel().tolist()}

    @classmethod
    def from_json(cls, obj):
        lo, hi = obj["domain"]
        res = tuple(obj["resolution"])
        return cls(np.asarray(lo, float), np.asarray(hi, float),
                   np.asarray(obj["values"], float).reshape(res))


def from_function(func, lo, hi, resolution):
    """Sample ``func`` (vectorized over points of shape ``(..., d)``) at cell centres."""
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    res = tuple(np.broadcast_to(np.asarray(resolution, int), lo.shape))
    probe = GridDensity(lo, hi, np.zeros(res))
    return GridDensity(lo, hi, np.asarray(func(probe.centers()), float).reshape(res))


def indicator(lo, hi, resolution):
    return from_function(lambda x: np.ones(x.shape[:-1]), lo, hi, resolution)


def is_log_concave(f, tol=1e-6):
    """Discrete midpoint test along every axis on interior triples, plus support convexity."""
    with np.errstate(divide="ignore"):
        L = np.log(f.values)
    for k in range(f.dim):
        a = np.moveaxis(L, k, 0)
        left, mid, right = a[:-2], a[1:-1], a[2:]
        both = np.isfinite(left) & np.isfinite(right)
        if np.any(both & ~np.isfinite(mid)):
            return False
        ok = mid[both] >= 0.5 * (left[both] + right[both]) - tol * np.maximum(1.0, np.abs(mid[both]))
        if not np.all(ok):
            return False
    return True


def _output_grid(f, g, lam):
    if f.dim != g.dim:
        raise InvalidParameter("densities differ in dimension")
    if not 0 < lam < 1:
        raise InvalidParameter("lambda must lie in (0, 1)")
    lo = (1 - lam) * f.lo + lam * g.lo
    hi = (1 - lam) * f.hi + lam * g.hi
    res = tuple(max(a, b) for a, b in zip(f.resolution, g.resolution))
    return GridDensity(lo, hi, np.zeros(res))


def _log_values(f):
    with np.errstate(divide="ignore"):
        L = np.log(f.values)
    return np.where(np.isfinite(L), L, -LOG_FLOOR)


def _interp_log(f, L, pts):
    """Multilinear interpolation of log-values between cell centres.

    Within half a cell of the domain edge the edge segment is extended
    linearly; beyond that the value is ``-LOG_FLOOR``.
    """
    d = f.dim
    shape = np.array(f.resolution)
    u = (pts - f.lo) / f.cell - 0.5
    outside = np.any((u < -0.5 - 1e-9) | (u > shape - 0.5 + 1e-9), axis=-1)
    base = np.clip(np.floor(u), 0, np.maximum(shape - 2, 0)).astype(np.int64)
    t = np.where(shape > 1, u - base, 0.0)
    # snap rounding noise at the nodes, or a weight of 1e-14 on -LOG_FLOOR wipes out edge cells
    t = np.where(np.abs(t) < 1e-9, 0.0, np.where(np.abs(t - 1.0) < 1e-9, 1.0, t))
    out = np.zeros(pts.shape[:-1])
    for corner in range(1 << d):
        bits = np.array([(corner >> k) & 1 for k in range(d)])
        idx = np.minimum(base + bits, shape - 1)
        w = np.prod(np.where(bits, t, 1.0 - t), axis=-1)
        out += w * L[tuple(np.moveaxis(idx, -1, 0))]
    out[outside] = -LOG_FLOOR
    return out


def sup_convolution(f, g, lam, method="auto", chunk=CHUNK):
    """Grid sup-convolution ``h(z) = sup f(x)^(1-lam) g(y)^lam`` over ``(1-lam)x + lam y = z``.

    The output domain is ``(1-lam) dom f + lam dom g`` at the finer of the two
    resolutions per axis.

    Parameters
    ----------
    method : {"auto", "center", "legendre", "floor"}
        ``"center"`` evaluates h at each output cell centre, maximizing over
        every grid point of f (log g interpolated at the matching y) and every
        grid point of g. In 1D this is the exact sup of the piecewise-linear
        log-interpolants, so log-concave inputs give a log-concave output.
        ``"legendre"`` requires log-concave inputs and uses
        ``-log h = ((1-lam) u* + lam v*)*`` with ``u = -log f``,
        ``v = -log g`` and axis-by-axis discrete conjugates, restricted to
        the combined support hull. ``"floor"`` visits every pair of grid
        points and credits the cell containing ``(1-lam)x + lam y``.
        ``"auto"`` picks center in 1D, legendre for log-concave inputs in
        higher dimension and floor otherwise.
    """
    lam = float(lam)
    out = _output_grid(f, g, lam)
    if method == "auto":
        if f.dim == 1:
            method = "center"
        elif is_log_concave(f, 1e-9) and is_log_concave(g, 1e-9):
            method = "legendre"
        else:
            method = "floor"
    if method == "floor":
        return _sup_floor(f, g, lam, out, chunk)
    if method == "legendre":
        return _sup_legendre(f, g, lam, out)
    if method != "center":
        raise InvalidParameter(f"unknown method {method!r}")
    d = f.dim
    Lf, Lg = _log_values(f), _log_values(g)
    z = out.centers().reshape(-1, d)
    logh = np.full(len(z), -np.inf)
    for src, other, Ls, Lo, ws, wo in ((f, g, Lf, Lg, 1 - lam, lam), (g, f, Lg, Lf, lam, 1 - lam)):
        keep = src.values.ravel() > 0
        xs = src.centers().reshape(-1, d)[keep]
        ls = ws * Ls.ravel()[keep]
        if len(xs) == 0:
            return out
        step = max(1, chunk // len(xs))
        for start in range(0, len(z), step):
            zz = z[start:start + step]
            pts = (zz[:, None, :] - ws * xs[None, :, :]) / wo
            val = ls[None, :] + wo * _interp_log(other, Lo, pts)
            np.maximum(logh[start:start + step], val.max(axis=1), out=logh[start:start + step])
    logh[logh < -0.5 * LOG_FLOOR] = -np.inf
    return GridDensity(out.lo, out.hi, np.exp(logh).reshape(out.resolution))


def _max_plus(A, axes, slopes):
    """``B(s) = max_x (s.x + A(x))`` computed one axis at a time."""
    for k, (x, s) in enumerate(zip(axes, slopes)):
        A = np.moveaxis(A, k, 0)
        rest = A.shape[1:]
        flat = A.reshape(len(x), -1)
        B = np.empty((len(s), flat.shape[1]))
        for start in range(0, len(s), 64):
            ss = s[start:start + 64]
            B[start:start + 64] = (ss[:, None, None] * x[None, :, None] + flat[None]).max(axis=1)
        A = np.moveaxis(B.reshape((len(s),) + rest), 0, k)
    return A


def _support_hull_points(f):
    idx = np.argwhere(f.values > 0)
    corners = np.array([[(c >> k) & 1 for k in range(f.dim)] for c in range(1 << f.dim)])
    pts = (f.lo + (idx[:, None, :] + corners[None]) * f.cell).reshape(-1, f.dim)
    if f.dim == 1:
        return np.array([pts.min(axis=0), pts.max(axis=0)])
    return pts[ConvexHull(pts).vertices]


def _sup_legendre(f, g, lam, out):
    d = f.dim
    Lf, Lg = _log_values(f), _log_values(g)
    if not (f.values > 0).any() or not (g.values > 0).any():
        return out
    # slope box wide enough for every finite difference of either log-density
    slopes = []
    for k in range(d):
        steep = 0.0
        for F, L in ((f, Lf), (g, Lg)):
            D = np.diff(L, axis=k) / F.cell[k]
            ok = (np.take(L, range(L.shape[k] - 1), axis=k) > -0.5 * LOG_FLOOR) & (
                np.take(L, range(1, L.shape[k]), axis=k) > -0.5 * LOG_FLOOR)
            if ok.any():
                steep = max(steep, float(np.abs(D[ok]).max()))
        steep = 1.05 * steep + 1.0
        slopes.append(np.linspace(-steep, steep, 4 * out.resolution[k] + 1))
    NEG = -np.inf
    Af = np.where(Lf > -0.5 * LOG_FLOOR, Lf, NEG)
    Ag = np.where(Lg > -0.5 * LOG_FLOOR, Lg, NEG)
    # u*(s) = max_x (s.x - u(x)) = max_x (s.x + log f(x))
    us = _max_plus(Af, f.axes(), slopes)
    vs = _max_plus(Ag, g.axes(), slopes)
    W = (1 - lam) * us + lam * vs
    # -log h(z) = max_s (z.s - W(s))
    logh = -_max_plus(-W, slopes, out.axes())
    P, Q = _support_hull_points(f), _support_hull_points(g)
    S = ((1 - lam) * P[:, None, :] + lam * Q[None, :, :]).reshape(-1, d)
    z = out.centers().reshape(-1, d)
    tol = 1e-12 * np.abs(S).max()
    if d == 1:
        inside = (z[:, 0] >= S.min() - tol) & (z[:, 0] <= S.max() + tol)
    else:
        eq = ConvexHull(S).equations
        inside = np.all(z @ eq[:, :-1].T + eq[:, -1] <= tol, axis=1)
    logh = np.where(inside.reshape(out.resolution), logh, -np.inf)
    return GridDensity(out.lo, out.hi, np.exp(logh))


def _sup_floor(f, g, lam, out, chunk):
    d = f.dim
    res = out.resolution
    lo, cell = out.lo, out.cell
    fv, gv = f.values.ravel(), g.values.ravel()
    fi, gi = np.flatnonzero(fv > 0), np.flatnonzero(gv > 0)
    logh = np.full(int(np.prod(res)), -np.inf)
    if len(fi) == 0 or len(gi) == 0:
        return out
    A = (1 - lam) * f.centers().reshape(-1, d)[fi]
    B = lam * g.centers().reshape(-1, d)[gi]
    lf, lg = (1 - lam) * np.log(fv[fi]), lam * np.log(gv[gi])
    step = max(1, chunk // len(gi))
    dims = np.array(res)
    for start in range(0, len(fi), step):
        z = A[start:start + step, None, :] + B[None, :, :]
        idx = np.floor((z - lo) / cell).astype(np.int64)
        np.clip(idx, 0, dims - 1, out=idx)
        flat = np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), res).ravel()
        val = (lf[start:start + step, None] + lg[None, :]).ravel()
        np.maximum.at(logh, flat, val)
    return GridDensity(out.lo, out.hi, np.exp(logh).reshape(res))


def pl_excess(f, g, lam, h=None):
    """``∫h / ((∫f)^(1-lam) (∫g)^lam) - 1`` for the grid sup-convolution ``h``."""
    mf, mg = f.mass, g.mass
    if mf <= 0 or mg <= 0:
        raise InvalidParameter("zero mass")
    if h is None:
        h = sup_convolution(f, g, lam)
    return h.mass / (mf ** (1 - lam) * mg ** lam) - 1.0


def pl_stability_distance(f, g, shifts):
    """Shift ``w`` from ``shifts`` minimizing ``∫ |f(x) - g(x + w)| dx``.

    ``g`` is interpolated linearly at the shifted cell centres of ``f``.

    Returns
    -------
    w : ndarray
    distance : float
    """
    W = np.atleast_2d(np.asarray(shifts, float))
    if W.shape[1] != f.dim and W.shape[0] == f.dim and f.dim > 1:
        W = W.T
    if f.dim == 1:
        W = W.reshape(-1, 1)
    x = f.centers().reshape(-1, f.dim)
    vol = float(np.prod(f.cell))
    fv = f.values.ravel()
    g_inside = g.mass
    best_w, best_d = None, math.inf
    for w in W:
        gv = g.evaluate(x + w)
        # mass of g that the shifted window misses counts fully
        covered = gv.sum() * vol
        dist = float(np.abs(fv - gv).sum() * vol + max(g_inside - covered, 0.0))
        if dist < best_d - 1e-15:
            best_w, best_d = w, dist
    return best_w, best_d


def shift_grid(extent, step, dim=1):
    """Uniform grid of shifts in ``[-extent, extent]^dim``."""
    ticks = np.arange(-extent, extent + 0.5 * step, step)
    return np.stack(np.meshgrid(*([ticks] * dim), indexing="ij"), -1).reshape(-1, dim)


def random_log_concave(rng, dim=1, resolution=None):
    """Random log-concave density: a Gaussian-like bump times a linear tilt, truncated to a box."""
    rng = np.random.default_rng(rng)
    if resolution is None:
        resolution = 512 if dim == 1 else 64
    lo, hi = -np.ones(dim) * 3, np.ones(dim) * 3
    mean = rng.uniform(-0.8, 0.8, dim)
    Q = rng.standard_normal((dim, dim))
    prec = Q @ Q.T + 0.5 * np.eye(dim)
    tilt = rng.uniform(-1, 1, dim)
    cut_lo = rng.uniform(-2.8, -1.5, dim)
    cut_hi = rng.uniform(1.5, 2.8, dim)

    def dens(x):
        y = x - mean
        q = np.einsum("...i,ij,...j->...", y, prec, y)
        inside = np.all((x >= cut_lo) & (x <= cut_hi), axis=-1)
        return np.where(inside, np.exp(-0.5 * q + y @ tilt), 0.0)

    return from_function(dens, lo, hi, resolution)
