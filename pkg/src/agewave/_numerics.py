"""Small numerical building blocks shared by the modules."""

import math

import numpy as np

from .errors import BracketError, NonConvergenceError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def age_weights(n, h):
    """Composite quadrature weights on `n` uniform nodes with spacing `h`.

    Simpson's rule (one Richardson step over the trapezoid rule) when the
    panel count is even; otherwise Simpson on the leading panels and the
    3/8 rule on the last three. All weights are positive.
    """
    if n < 3:
        raise ValueError("need at least 3 nodes")
    w = np.zeros(n)
    panels = n - 1
    if panels % 2 == 0:
        w[0:n:2] += 2.0
        w[1:n:2] += 4.0
        w[0] = w[-1] = 1.0
        return w * h / 3.0
    simpson_nodes = n - 3
    if simpson_nodes >= 3:
        w[:simpson_nodes] = age_weights(simpson_nodes, h)
    w[-4:] += np.array([3.0, 9.0, 9.0, 3.0]) * h / 8.0
    return w


def trapezoid_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def phi1(z):
    """(e^z - 1)/z, stable near 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-5
    zs = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z / 2.0 + z * z / 6.0, np.expm1(zs) / zs)


def phi2(z):
    """(e^z - 1 - z)/z^2, stable near 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    series = 0.5 + z / 6.0 + z * z / 24.0 + z ** 3 / 120.0
    return np.where(small, series, (np.expm1(zs) - zs) / (zs * zs))


def bisect(f, lo, hi, *, ftol=0.0, xtol=1e-14, max_iter=200):
    """Plain bisection for a sign change of `f` on [lo, hi].

    Returns the midpoint once |f| <= ftol or the bracket is narrower than
    `xtol` (relative to max(1, |x|)).
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= ftol or (hi - lo) <= xtol * max(1.0, abs(mid)):
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    raise NonConvergenceError(f"bisection did not converge on [{lo}, {hi}]")


def golden_section(f, lo, hi, *, xtol=1e-10, max_iter=500):
    """Minimize a unimodal `f` on [lo, hi]. Returns (argmin, minimum)."""
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= xtol * max(1.0, abs(x1)):
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
    else:
        raise NonConvergenceError("golden-section search did not converge")
    x = 0.5 * (lo + hi)
    fx = f(x)
    candidates = [(fx, x), (f1, x1), (f2, x2)]
    fbest, xbest = min(candidates)
    return xbest, fbest


def sample_rows(values, grid0, h, points, left, right, mode="geometric"):
    """Evaluate row i of `values` (uniform grid, first node `grid0`,
    spacing `h`) at ``points[i, :]``.

    `left` and `right` are far-field closures: scalars, one value per row,
    or callables ``f(row_index_array, points)`` returning closure values
    at points beyond the grid. ``mode="geometric"`` interpolates
    log-linearly (exact for exponentials, order-preserving); ``"linear"``
    interpolates linearly.
    """
    values = np.asarray(values, dtype=float)
    nrow, n = values.shape
    points = np.asarray(points, dtype=float)
    points = np.broadcast_to(points, (nrow, points.shape[-1]))
    q = (points - grid0) / h
    j = np.floor(q + 1e-12).astype(int)
    theta = np.clip(q - j, 0.0, 1.0)
    all_rows = np.broadcast_to(np.arange(nrow)[:, None], q.shape)

    def fetch(idx):
        out = np.empty(idx.shape)
        inside = (idx >= 0) & (idx < n)
        out[inside] = values[all_rows[inside], idx[inside]]
        for mask, closure in ((idx < 0, left), (idx >= n, right)):
            if not mask.any():
                continue
            if callable(closure):
                out[mask] = closure(all_rows[mask], grid0 + h * idx[mask])
                continue
            cv = np.asarray(closure, dtype=float)
            if cv.ndim == 0:
                out[mask] = cv
            else:
                out[mask] = cv[all_rows[mask]]
        return out

    ul = fetch(j)
    ur = fetch(j + 1)
    if mode == "linear":
        return (1.0 - theta) * ul + theta * ur
    if mode != "geometric":
        raise ValueError(f"unknown interpolation mode {mode!r}")
    out = np.zeros_like(ul)
    pos = (ul > 0.0) & (ur > 0.0)
    th = theta[pos]
    out[pos] = np.exp((1.0 - th) * np.log(ul[pos]) + th * np.log(ur[pos]))
    # exact node hits keep their value even when the neighbour is 0
    exact_l = theta <= 0.0
    exact_r = theta >= 1.0
    out[exact_l] = ul[exact_l]
    out[exact_r] = ur[exact_r]
    return out


def shift_rows(values, grid0, h, shifts, left, right, mode="geometric"):
    """Row i of `values` evaluated at ``grid + shifts[i]`` (see `sample_rows`)."""
    values = np.asarray(values, dtype=float)
    nrow, n = values.shape
    shifts = np.broadcast_to(np.asarray(shifts, dtype=float), (nrow,))
    grid = grid0 + h * np.arange(n)
    return sample_rows(values, grid0, h, grid[None, :] + shifts[:, None], left, right, mode)
