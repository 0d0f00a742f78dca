"""Principal eigenproblem of the age-renewal operator L_s, dispersion
function Λ(λ, c), critical speed c* and exponential decay roots."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._numerics import bisect, phi1, phi2
from .errors import BracketError, DomainError, SpectralError, SubcriticalModelError

RHO_TOL = 1e-10
ROOT_XTOL = 1e-14
CRIT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LsMatrix:
    s: float
    entries: np.ndarray

    def __matmul__(self, v):
        return self.entries @ v


def _kernel_of(obj):
    return getattr(obj, "J", obj)


def _growth_weights(nodes, s):
    """Matrix C with (C g)_i = ∫_0^{a_i} e^{s(a_i - l)} g(l) dl for g
    piecewise linear through its node values (exact product integration)."""
    n = nodes.size
    h = nodes[1] - nodes[0]
    z = s * h
    E = math.exp(z)
    alpha = h * float(phi1(z) - phi2(z))
    beta = h * float(phi2(z))
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    d = i - j
    with np.errstate(over="ignore"):
        powers = np.power(E, np.maximum(d - 1, 0).astype(float))
    C = np.where(d >= 1, alpha * powers, 0.0)
    C = C + np.where((d >= 0) & (j >= 1), beta * powers * np.where(d >= 1, E, 1.0), 0.0)
    return C


def assemble_Ls(spec, s):
    """Discretization of
    [L_s φ](a) = e^{sa} ∫γφ + ∫_0^a e^{s(a-l)} ∫K(l,a')π(a')φ(a') da' dl.
    """
    s = float(s)
    nodes = spec.nodes
    M = np.exp(s * nodes)[:, None] * spec.gamma_w[None, :]
    M = M + _growth_weights(nodes, s) @ spec.Kpi_w
    return LsMatrix(s, M)


def spectral_radius(M, tol=1e-12, max_iter=100000):
    """Power iteration from the constant vector with max-normalization.

    Returns (rho, v) with v > 0 and max v = 1.
    """
    A = M.entries if isinstance(M, LsMatrix) else np.asarray(M, dtype=float)
    v = np.ones(A.shape[0])
    rho_prev = math.nan
    for _ in range(max_iter):
        w = A @ v
        rho = float(v @ w) / float(v @ v)
        top = float(w.max())
        if not top > 0:
            raise SpectralError("power iteration collapsed to zero")
        v = w / top
        if abs(rho - rho_prev) < tol * max(1.0, abs(rho)):
            if v.min() <= 0:
                raise SpectralError("principal eigenvector is not positive")
            return rho, v
        rho_prev = rho
    residual = float(np.abs(A @ v - rho * v).max())
    raise SpectralError(f"power iteration did not converge (residual {residual:.3g})")


def rho_of_s(spec, s):
    return spectral_radius(assemble_Ls(spec, s))[0]


def find_s0(spec, tol=RHO_TOL):
    """Unique s0 < 0 with ρ(L_{s0}) = 1."""
    rho0 = rho_of_s(spec, 0.0)
    if not rho0 > 1.0:
        raise SubcriticalModelError(f"ρ(L_0) = {rho0:.12g} ≤ 1")
    lo = -1.0
    for _ in range(200):
        if rho_of_s(spec, lo) < 1.0:
            break
        lo *= 2.0
    else:
        raise BracketError("could not bracket s0 from below")
    s0 = bisect(lambda s: rho_of_s(spec, s) - 1.0, lo, 0.0, xtol=1e-15)
    defect = rho_of_s(spec, s0) - 1.0
    if abs(defect) > tol:
        raise SpectralError(f"|ρ(L_s0) - 1| = {abs(defect):.3g} exceeds {tol:g}")
    return s0


def eigenfunction_phi(spec, s0):
    """Positive fixed point of L_{s0}, normalized to max φ = 1."""
    M = assemble_Ls(spec, s0)
    _, v = spectral_radius(M)
    return v / v.max()


def big_lambda(J, lam, c):
    """Λ(λ, c) = ∫ J(y) e^{λy} dy − 1 − cλ."""
    return _kernel_of(J).mgf(lam) - 1.0 - c * lam


def _upper_rate(J, lam):
    """Next probe when expanding a bracket upwards, kept below the
    abscissa of convergence of the exponential moments."""
    cap = J.abscissa
    if math.isfinite(cap):
        return min(2.0 * lam, 0.5 * (lam + cap))
    return 2.0 * lam


def lambda_of_c(J, c):
    """Unique λ > 0 with ∫ J(y) y e^{λy} dy = c."""
    J = _kernel_of(J)
    if not c > 0:
        raise DomainError("lambda_of_c requires c > 0")

    def f(lam):
        return J.moment(lam, 1) - c

    hi = min(1.0, 0.5 * J.abscissa)
    for _ in range(200):
        if f(hi) > 0:
            break
        hi = _upper_rate(J, hi)
    else:
        raise BracketError(f"no bracket for λ(c) at c = {c}")
    return brentq(f, 0.0, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)


def critical_speed(J, s0, tol=CRIT_TOL):
    """c* with Λ(λ(c*), c*) = s0. Returns (c_star, lambda_star).

    c ↦ Λ(λ(c), c) is strictly decreasing and λ(c) strictly increasing, so
    the root is bracketed along λ: at the tangency c = ∫J y e^{λy} and
    g(λ) = mgf(λ) − 1 − λ·mgf'(λ) decreases from 0 to −∞.
    """
    J = _kernel_of(J)
    if not s0 < 0:
        raise DomainError("critical_speed requires s0 < 0")

    def g(lam):
        return J.mgf(lam) - 1.0 - lam * J.moment(lam, 1) - s0

    hi = min(1.0, 0.5 * J.abscissa)
    for _ in range(200):
        if g(hi) < 0:
            break
        hi = _upper_rate(J, hi)
    else:
        raise BracketError("no bracket for the critical speed")
    lam = brentq(g, 0.0, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    c = J.moment(lam, 1)
    defect = big_lambda(J, lambda_of_c(J, c), c) - s0
    if abs(defect) > tol:
        raise BracketError(f"critical speed defect {defect:.3g} exceeds {tol:g}")
    return c, lam


def decay_roots(J, s0, c, c_star, lambda_star=None, *, tangency_tol=1e-9):
    """The two roots λ1 < λ(c) < λ2 of Λ(λ, c) = s0 for c > c*."""
    J = _kernel_of(J)
    if c < c_star - tangency_tol * max(1.0, c_star):
        raise DomainError(f"c = {c} is below the critical speed {c_star}")
    if abs(c - c_star) <= tangency_tol * max(1.0, c_star):
        lam = lambda_star if lambda_star is not None else lambda_of_c(J, c)
        return lam, lam
    lc = lambda_of_c(J, c)

    def f(lam):
        return big_lambda(J, lam, c) - s0

    if not f(lc) < 0:
        raise DomainError(f"no decay roots at c = {c}")
    l1 = brentq(f, 0.0, lc, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    hi = _upper_rate(J, max(lc, 1e-3))
    for _ in range(200):
        if f(hi) > 0:
            break
        hi = _upper_rate(J, hi)
    else:
        raise BracketError(f"no upper bracket for the second decay root at c = {c}")
    l2 = brentq(f, lc, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    return l1, l2


@dataclass(eq=False)
class DispersionReport:
    s0: float
    phi: np.ndarray
    c_star: float
    lambda_star: float
    J: object = field(repr=False)

    def lambda_of(self, c):
        return lambda_of_c(self.J, c)

    def roots(self, c):
        return decay_roots(self.J, self.s0, c, self.c_star, self.lambda_star)

    def big_lambda(self, lam, c):
        return big_lambda(self.J, lam, c)

    def to_dict(self):
        return {"s0": self.s0, "c_star": self.c_star, "lambda_star": self.lambda_star,
                "phi": [float(v) for v in self.phi]}


def dispersion_report(spec):
    s0 = find_s0(spec)
    phi = eigenfunction_phi(spec, s0)
    c_star, lam_star = critical_speed(spec.J, s0)
    return DispersionReport(s0, phi, c_star, lam_star, spec.J)
