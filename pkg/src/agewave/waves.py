"""Traveling waves: explicit super/sub-solution pair, monotone iteration
to a profile, residual and regularity diagnostics, and the critical-speed
wave as a limit of supercritical ones.

Two frames are used. In the comoving frame z = x − ct a wave satisfies

    U_a − c U_z = J∗U − U + (∫K(a,a')π(a')U(a',z) da') (1 − U),
    U(0,z) = ∫γ(a) U(a,z) da,

and the pair (Ū, U̲) is written there. Along characteristics,
w(a, ξ) = U(a, ξ − ca) solves

    w_a = J∗w − w + (∫K(a,a')π(a')w(a', ξ + c(a'−a)) da') (1 − w),
    w(0,ξ) = ∫γ(a) w(a, ξ + ca) da,

which is the frame the profiles are computed and stored in.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import kernels
from ._numerics import golden_section, sample_rows
from .errors import (DomainError, NonConvergenceError, OrderingError,
                     ParameterSelectionError, RegularityError, StabilityError)
from .model import SpaceGrid
from .spectral import spectral_radius

ORDER_TOL = 1e-8
PAIR_TOL = 1e-9
DEFAULT_FRAME = SpaceGrid(30.0, 1201)


def p_of_eta(J, eta, lam, c):
    """p(η) = Λ(λ, c) − Λ(λ + η, c)."""
    J = getattr(J, "J", J)
    return J.mgf(lam) - c * lam - J.mgf(lam + eta) + c * (lam + eta)


@dataclass(frozen=True, eq=False)
class SubSuperPair:
    """Ū(a,z) = min{1, e^{−λz}φ(a)} and U̲(a,z) = max{0, (e^{−λz} − k e^{−(λ+η)z})φ(a)}
    in the comoving frame, optionally translated by `z0`."""

    c: float
    lam: float
    alpha: float
    k: float
    eta: float
    xi_M: float
    p_eta: float
    s0: float
    age_nodes: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    z0: float = 0.0
    forced: bool = False
    retries: int = 0
    grid: bool = False
    lam_reference: float = None

    def _phi(self, a):
        return np.interp(a, self.age_nodes, self.phi)

    def super(self, a, z):
        zeta = np.asarray(z, dtype=float) - self.z0
        with np.errstate(over="ignore"):
            return np.minimum(1.0, np.exp(-self.lam * zeta) * self._phi(a))

    def sub(self, a, z):
        zeta = np.asarray(z, dtype=float) - self.z0
        with np.errstate(over="ignore", invalid="ignore"):
            factor = 1.0 - self.k * np.exp(-self.eta * zeta)
            val = np.where(factor > 0, np.exp(-self.lam * zeta) * factor, 0.0)
        return np.maximum(0.0, val * self._phi(a))

    def super_w(self, a, xi):
        a = np.asarray(a, dtype=float)
        return self.super(a, np.asarray(xi, dtype=float) - self.c * a)

    def sub_w(self, a, xi):
        a = np.asarray(a, dtype=float)
        return self.sub(a, np.asarray(xi, dtype=float) - self.c * a)

    def translate(self, delta):
        return replace(self, z0=self.z0 + delta)


def _phi_rate(spec, s0, phi):
    """φ' = s0·φ + ∫Kπφ, the age derivative of the principal eigenfunction."""
    return s0 * phi + spec.Kpi_w @ phi


def _pair_from(spec, report, c, lam, eta, k_scale=1.0, forced=False, retries=0):
    phi = np.asarray(report.phi, dtype=float)
    alpha = float(phi.max())
    xi_M = math.log(alpha) / lam
    p = p_of_eta(spec.J, eta, lam, c)
    g_sup = float((spec.Kpi_w @ phi).max())
    phi_min = float(phi.min())
    if p > 0:
        k1 = alpha * g_sup * math.exp((eta - lam) * xi_M) / (p * phi_min)
        k2 = g_sup * math.exp(eta * xi_M) / (p * phi_min)
        k = max(k1, k2, 1.0) * k_scale
    else:
        k = 1.0
    return SubSuperPair(c=c, lam=lam, alpha=alpha, k=k, eta=eta, xi_M=xi_M, p_eta=p, s0=report.s0,
                        age_nodes=spec.nodes.copy(), phi=phi.copy(), forced=forced, retries=retries)


def select_sub_parameters(spec, report, c, *, frame=DEFAULT_FRAME, verify=True,
                          force=False, max_retries=40):
    """Build the ordered pair for speed c > c*.

    λ = λ1(c), α = max φ, η = ½ min(λ1, λ2 − λ1) halved until p(η) > 0,
    k = max(k1, k2, 1) from the two sufficient bounds. With `verify`, the
    inequalities are re-checked on the grid and on failure η is halved and
    k doubled. `force=True` accepts c ≤ c* and returns an unverified pair
    built on λ(c) so the failure can be inspected.
    """
    if c <= report.c_star:
        if not force:
            raise DomainError(f"c = {c} must exceed the critical speed {report.c_star}")
        lam = report.lambda_of(c)
        return _pair_from(spec, report, c, lam, 0.5 * lam, forced=True)
    lam1, lam2 = report.roots(c)
    eta = 0.5 * min(lam1, lam2 - lam1)
    while p_of_eta(spec.J, eta, lam1, c) <= 0:
        eta *= 0.5
        if eta < 1e-14:
            raise ParameterSelectionError("no η with p(η) > 0")
    pair = _pair_from(spec, report, c, lam1, eta)
    if not verify:
        return pair
    for attempt in range(max_retries + 1):
        check = verify_ordered_pair(pair, spec, frame=frame)
        if check.passed:
            return pair
        eta *= 0.5
        pair = _pair_from(spec, report, c, lam1, eta, k_scale=2.0 ** (attempt + 1), retries=attempt + 1)
    raise ParameterSelectionError(f"pair verification failed after {max_retries} retries: {check.worst()}")


@dataclass
class PairReport:
    ordering: float
    lower_bound: float
    upper_bound: float
    super_margin: float
    sub_margin: float
    super_boundary: float
    sub_boundary: float
    super_worst_at: tuple
    sub_worst_at: tuple
    tol: float = PAIR_TOL

    @property
    def margins(self):
        return {"ordering": self.ordering, "lower_bound": self.lower_bound,
                "upper_bound": self.upper_bound, "super": self.super_margin, "sub": self.sub_margin,
                "super_boundary": self.super_boundary, "sub_boundary": self.sub_boundary}

    @property
    def passed(self):
        return all(v >= -self.tol for v in self.margins.values())

    def worst(self):
        name, value = min(self.margins.items(), key=lambda kv: kv[1])
        return f"{name} margin {value:.3g}"

    def to_dict(self):
        out = dict(self.margins)
        out.update(passed=self.passed, super_worst_at=list(self.super_worst_at),
                   sub_worst_at=list(self.sub_worst_at))
        return out


def verify_ordered_pair(pair, spec, frame=DEFAULT_FRAME, tol=PAIR_TOL):
    """Pointwise check of 0 ≤ U̲ ≤ Ū ≤ 1 and of the differential and
    boundary inequalities on the (a, z) grid. Margins are oriented so that
    a nonnegative value means the inequality holds."""
    a = spec.nodes
    z = frame.nodes
    h = frame.step
    c, lam, eta, k = pair.c, pair.lam, pair.eta, pair.k
    zeta = z[None, :] - pair.z0
    phi = pair.phi[:, None]
    dphi = _phi_rate(spec, pair.s0, pair.phi)[:, None]
    weights = spec.J.stencil(h)
    m = (len(weights) - 1) // 2
    left_pts = z[0] - h * np.arange(m, 0, -1)
    right_pts = z[-1] + h * np.arange(1, m + 1)

    def conv(fn):
        return kernels.convolve(fn(a[:, None], z[None, :]), weights,
                                left=fn(a[:, None], left_pts[None, :]),
                                right=fn(a[:, None], right_pts[None, :]))

    S = pair.super(a[:, None], z[None, :])
    B = pair.sub(a[:, None], z[None, :])
    with np.errstate(over="ignore", invalid="ignore"):
        e1 = np.exp(-lam * zeta)
        e2 = np.exp(-(lam + eta) * zeta)
        s_active = e1 * phi < 1.0
        s_transport = np.where(s_active, e1 * (dphi + c * lam * phi), 0.0)
        b_active = B > 0
        b_transport = np.where(b_active, e1 * (dphi + c * lam * phi)
                               - k * e2 * (dphi + c * (lam + eta) * phi), 0.0)
    d_super = s_transport - (conv(pair.super) - S) - (spec.Kpi_w @ S) * (1.0 - S)
    d_sub = b_transport - (conv(pair.sub) - B) - (spec.Kpi_w @ B) * (1.0 - B)
    sup_bd = S[0] - spec.gamma_w @ S
    sub_bd = spec.gamma_w @ B - B[0]
    i_s = np.unravel_index(np.argmin(d_super), d_super.shape)
    i_b = np.unravel_index(np.argmax(d_sub), d_sub.shape)
    return PairReport(
        ordering=float((S - B).min()),
        lower_bound=float(B.min()),
        upper_bound=float((1.0 - S).min()),
        super_margin=float(d_super.min()),
        sub_margin=float(-d_sub.max()),
        super_boundary=float(sup_bd.min()),
        sub_boundary=float(sub_bd.min()),
        super_worst_at=(float(a[i_s[0]]), float(z[i_s[1]])),
        sub_worst_at=(float(a[i_b[0]]), float(z[i_b[1]])),
        tol=tol,
    )


@dataclass(eq=False)
class WaveProfile:
    c: float
    a: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    residual: float = math.nan
    iterations: int = 0
    lipschitz_m: float = None
    lambda1: float = None
    translate: float = 0.0
    branch: str = "maximal"
    increments: list = field(default_factory=list, repr=False)
    sandwich_lower: list = field(default_factory=list, repr=False)
    sandwich_upper: list = field(default_factory=list, repr=False)
    order_violation: list = field(default_factory=list, repr=False)
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def h(self):
        return float(self.xi[1] - self.xi[0])

    def edge_defects(self):
        """(max_a |w(a, ξ_left) − 1|, max_a w(a, ξ_right))."""
        return float(np.abs(self.w[:, 0] - 1.0).max()), float(np.abs(self.w[:, -1]).max())

    def monotonicity_violation(self):
        """Largest increase of w along ξ (≤ 0 for a nonincreasing profile)."""
        return float(np.diff(self.w, axis=1).max())

    def summary(self):
        left, right = self.edge_defects()
        return {"c": self.c, "residual": self.residual, "iterations": self.iterations,
                "m_fit": self.lipschitz_m, "lambda1": self.lambda1, "translate": self.translate,
                "branch": self.branch, "edge_left": left, "edge_right": right,
                "monotonicity_violation": self.monotonicity_violation(),
                "sandwich_lower": min(self.sandwich_lower, default=math.nan),
                "sandwich_upper": max(self.sandwich_upper, default=math.nan),
                **{k: v for k, v in self.diagnostics.items() if k != "profiles"}}


class _Frame:
    """Shared geometry for the iteration map and the residual."""

    def __init__(self, spec, c, xi):
        self.spec = spec
        self.c = c
        self.a = spec.nodes
        self.da = spec.age_grid.step
        self.xi = xi
        self.h = float(xi[1] - xi[0])
        self.n = xi.size
        self.n_ext = int(math.ceil(c * spec.age_grid.a_max / self.h)) + 1
        self.ext0 = xi[0] - self.n_ext * self.h
        self.eta_ext = self.ext0 + self.h * np.arange(self.n_ext + self.n)
        self.weights = spec.J.stencil(self.h)
        self.m = (len(self.weights) - 1) // 2

    def nonlocal_terms(self, u, left, right, mode="geometric"):
        """Boundary row ∫γ w(a, ξ+ca) da and the transmission term
        ∫Kπ w(a', ξ + c(a'−a)) da' for a state `u`."""
        a, c = self.a, self.c
        V = sample_rows(u, self.xi[0], self.h, self.eta_ext[None, :] + c * a[:, None], left, right, mode)
        boundary = self.spec.gamma_w @ V[:, self.n_ext:]
        G = self.spec.Kpi_w @ V
        Gw = sample_rows(G, self.ext0, self.h, self.xi[None, :] - c * a[:, None],
                         G[:, 0], G[:, -1], mode)
        return boundary, Gw


class _Sweeper(_Frame):
    """One application of the monotone iteration map, with far-field
    closures 1 on the left and the super-solution tail on the right."""

    def __init__(self, spec, c, xi, pair):
        super().__init__(spec, c, xi)
        self.pair = pair
        self.M = spec.M
        rows = np.arange(self.a.size)[:, None]
        self.right_pad = self.tail(rows, xi[-1] + self.h * np.arange(1, self.m + 1)[None, :])

    def tail(self, rows, pts):
        return self.pair.super_w(self.a[rows], pts)

    def apply(self, u):
        da, M = self.da, self.M
        boundary, Gw = self.nonlocal_terms(u, 1.0, self.tail)
        forcing = Gw * (1.0 - u) + M * u
        new = np.empty_like(u)
        new[0] = boundary
        for i in range(self.a.size - 1):
            row = new[i]
            conv = kernels.convolve(row, self.weights, left=1.0, right=self.right_pad[i])
            new[i + 1] = row + da * (conv - (1.0 + M) * row + forcing[i])
        return new


def _check_age_step(spec):
    da = spec.age_grid.step
    bound = 1.0 / (4.0 * (1.0 + spec.M))
    if da > bound * (1 + 1e-12):
        raise StabilityError(f"age step {da:g} exceeds 1/(4(1+M)) = {bound:g}; increase n_a")


def _frame_nodes(frame, xi0):
    return frame.nodes if xi0 is None else xi0 + frame.step * np.arange(frame.n_x)


def grid_growth_operator(spec, c, lam, h):
    """Matrix B(λ) of the linearized iteration map on tails e^{−λ(ξ−ca)}ψ(a).

    With m_h(λ) = Σ_k J_k e^{λ y_k} the stencil moment, q = e^{−λcΔa}(1 + Δa(m_h − 1)),
    a fixed point satisfies ψ_0 = Σ γ_j w_j ψ_j and
    ψ_{i+1} = q ψ_i + Δa e^{−λcΔa} Σ_j K_ij π_j w_j ψ_j.
    """
    weights = spec.J.stencil(h)
    m = (len(weights) - 1) // 2
    y = h * np.arange(-m, m + 1)
    da = spec.age_grid.step
    n = spec.age_grid.n_a
    with np.errstate(over="ignore"):
        mh = float(weights @ np.exp(lam * y))
        log_q = -lam * c * da + math.log(1.0 + da * (mh - 1.0))
        i = np.arange(n)[:, None]
        j = np.arange(n)[None, :]
        D = np.where(j < i, da * np.exp(-lam * c * da + log_q * np.maximum(i - 1 - j, 0)), 0.0)
        return np.exp(log_q * np.arange(n))[:, None] * spec.gamma_w[None, :] + D @ spec.Kpi_w


def _grid_rho(spec, c, lam, h):
    B = grid_growth_operator(spec, c, lam, h)
    if not np.all(np.isfinite(B)):
        return math.inf, None
    return spectral_radius(B)


def grid_decay_roots(spec, c, h):
    """Decay rates λ1 < λ2 at which e^{−λ(ξ−ca)}ψ(a) is a fixed tail of the
    discrete iteration map (spectral radius of `grid_growth_operator` = 1),
    the minimizing rate, and the eigenvector ψ at λ1 (max ψ = 1)."""
    cap = spec.J.abscissa
    hi = 1.0 if not math.isfinite(cap) else 0.5 * cap

    def rho(lam):
        return _grid_rho(spec, c, lam, h)[0]

    # expand until the spectral radius is increasing again
    for _ in range(100):
        if rho(hi) > rho(0.5 * hi) and rho(hi) > 1.0:
            break
        hi = 2.0 * hi if not math.isfinite(cap) else 0.5 * (hi + cap)
    lam_min, rho_min = golden_section(rho, 0.0, hi, xtol=1e-10)
    if not rho_min < 1.0:
        raise DomainError(f"c = {c} is at or below the grid critical speed (min ρ = {rho_min:.6g})")
    l1 = brentq(lambda s: rho(s) - 1.0, 0.0, lam_min, xtol=1e-14)
    l2 = brentq(lambda s: rho(s) - 1.0, lam_min, hi, xtol=1e-14)
    _, psi = _grid_rho(spec, c, l1, h)
    return l1, l2, lam_min, psi / psi.max()


@dataclass
class MapPairReport:
    """Margins of the pair under one application T of the iteration map:
    super = min(Ū − T Ū), sub = min(T U̲ − U̲), ordering = min(Ū − U̲)."""

    super_margin: float
    sub_margin: float
    ordering: float
    tol: float = 1e-12

    @property
    def passed(self):
        return min(self.super_margin, self.sub_margin, self.ordering) >= -self.tol

    def to_dict(self):
        return {"super": self.super_margin, "sub": self.sub_margin, "ordering": self.ordering,
                "passed": self.passed}


def check_pair_on_map(pair, spec, frame=DEFAULT_FRAME, xi0=None, tol=1e-12):
    xi = _frame_nodes(frame, xi0)
    sw = _Sweeper(spec, pair.c, xi, pair)
    a = spec.nodes[:, None]
    upper = pair.super_w(a, xi[None, :])
    lower = pair.sub_w(a, xi[None, :])
    return MapPairReport(float((upper - sw.apply(upper)).min()),
                         float((sw.apply(lower) - lower).min()),
                         float((upper - lower).min()), tol)


def grid_consistent_pair(spec, report, c, frame=DEFAULT_FRAME, max_retries=40):
    """The same explicit pair, built on the decay rate and age profile of
    the discretized iteration map rather than of the continuous equation.

    Explicit Euler in age shifts the decay rate of the discrete tails by
    O(Δa), so the continuous sub-solution is only approximately below the
    discrete iterates. With the grid rates, Ū and U̲ are exact super- and
    sub-solutions of the map (checked by applying it once), and every
    iterate stays between them up to rounding.
    """
    if c <= report.c_star:
        raise DomainError(f"c = {c} must exceed the critical speed {report.c_star}")
    h = frame.step
    l1, l2, _, psi = grid_decay_roots(spec, c, h)
    lam_ref = report.roots(c)[0]
    eta = 0.5 * min(l1, l2 - l1)
    g_sup = float((spec.Kpi_w @ psi).max())

    def build(eta, scale, retries):
        p = p_of_eta(spec.J, eta, l1, c)
        k = max(1.0, g_sup / (p * float(psi.min())) if p > 0 else 1.0) * scale
        return SubSuperPair(c=c, lam=l1, alpha=1.0, k=k, eta=eta, xi_M=0.0, p_eta=p, s0=report.s0,
                            age_nodes=spec.nodes.copy(), phi=psi.copy(), retries=retries,
                            grid=True, lam_reference=lam_ref)

    pair = build(eta, 1.0, 0)
    for attempt in range(max_retries + 1):
        check = check_pair_on_map(pair, spec, frame)
        if check.passed:
            return pair
        eta *= 0.5
        pair = build(eta, 2.0 ** (attempt + 1), attempt + 1)
    raise ParameterSelectionError(f"grid pair failed after {max_retries} retries: {check.to_dict()}")


def monotone_iterate(spec, c, pair, frame=DEFAULT_FRAME, tol=1e-8, max_iter=2000,
                     branch="maximal", xi0=None):
    """Monotone iteration from Ū (maximal branch) or U̲ (minimal branch).

    Each sweep marches the linear age problem
        ∂_a uⁿ = J∗uⁿ − (1+M)uⁿ + G(u^{n−1})(1 − u^{n−1}) + M u^{n−1},
        uⁿ(0, ξ) = ∫γ(a) u^{n−1}(a, ξ+ca) da,
    with explicit Euler in age. Off-grid shifts are interpolated
    log-linearly; beyond the window the state is 1 on the left and the
    super-solution tail on the right. Iterates are never clamped:
    departures from [U̲, Ū] are recorded and a sweep that increases the
    iterate (decreases it on the minimal branch) by more than 1e-8 raises.
    """
    if branch not in ("maximal", "minimal"):
        raise ValueError("branch must be 'maximal' or 'minimal'")
    _check_age_step(spec)
    xi = _frame_nodes(frame, xi0)
    sw = _Sweeper(spec, c, xi, pair)
    a = sw.a
    upper = pair.super_w(a[:, None], xi[None, :])
    lower = pair.sub_w(a[:, None], xi[None, :])
    u = (upper if branch == "maximal" else lower).copy()
    sign = 1.0 if branch == "maximal" else -1.0
    lam_ref = pair.lam_reference if pair.lam_reference is not None else pair.lam
    prof = WaveProfile(c=c, a=a.copy(), xi=xi.copy(), w=u, branch=branch, lambda1=lam_ref)
    prof.diagnostics["pair_rate"] = pair.lam
    increment = math.inf
    for n in range(1, max_iter + 1):
        new = sw.apply(u)
        step = new - u
        increment = float(np.abs(step).max())
        violation = float((sign * step).max())
        prof.increments.append(increment)
        prof.order_violation.append(violation)
        prof.sandwich_lower.append(float((new - lower).min()))
        prof.sandwich_upper.append(float((new - upper).max()))
        u = new
        if violation > ORDER_TOL:
            raise OrderingError(f"iteration {n} moved against the monotone direction by {violation:.3g}")
        if increment < tol:
            prof.w = u
            prof.iterations = n
            prof.residual = wave_residual(prof, spec)
            return prof
    raise NonConvergenceError(f"no convergence in {max_iter} iterations (last increment {increment:.3g})")


def wave_residual(profile, spec, c=None, band=None, detail=False):
    """Sup-norm defect of the w-equation and of its boundary condition on
    the interior of the window (edge bands of width 2·R_J are excluded).

    The age derivative is a forward difference; ξ-shifts use log-linear
    interpolation and the convolution the discrete stencil."""
    c = profile.c if c is None else c
    w = np.asarray(profile.w, dtype=float)
    F = _Frame(spec, c, profile.xi)
    band = 2.0 * spec.J.radius if band is None else band
    boundary, Gw = F.nonlocal_terms(w, w[:, 0], w[:, -1])
    conv = kernels.convolve(w, F.weights, left=w[:, 0], right=w[:, -1])
    ode = (w[1:] - w[:-1]) / F.da - (conv - w + Gw * (1.0 - w))[:-1]
    bd = w[0] - boundary
    inside = (profile.xi >= profile.xi[0] + band) & (profile.xi <= profile.xi[-1] - band)
    if not inside.any():
        raise DomainError("window too small for the residual edge bands")
    r_ode = float(np.abs(ode[:, inside]).max())
    r_bd = float(np.abs(bd[inside]).max())
    if detail:
        return {"ode": r_ode, "boundary": r_bd, "residual": max(r_ode, r_bd)}
    return max(r_ode, r_bd)


@dataclass
class LipschitzResult:
    m_fit: float
    m_min: float
    max_shift: int


def lipschitz_modulus_check(profile, lam1=None, max_shift=5, candidates=None):
    """Smallest candidate m (≥ λ1 when given) with
    |w(a, ξ+h) − w(a, ξ)| ≤ e^{m|h|} − 1 for all grid shifts |h| ≤ max_shift·h_ξ."""
    w = np.asarray(profile.w, dtype=float)
    h = profile.h
    lam1 = profile.lambda1 if lam1 is None else lam1
    if candidates is None:
        candidates = np.arange(1, 10001) * 0.01
    candidates = np.sort(np.asarray(candidates, dtype=float))
    m_min = 0.0
    for s in range(1, max_shift + 1):
        diff = np.abs(w[:, s:] - w[:, :-s]).max()
        m_min = max(m_min, math.log1p(diff) / (s * h))
    floor = m_min if lam1 is None else max(m_min, lam1)
    ok = candidates[candidates >= floor]
    if ok.size == 0:
        raise RegularityError(f"no candidate modulus ≥ {floor:.4g}")
    m_fit = float(ok[0])
    if isinstance(profile, WaveProfile):
        profile.lipschitz_m = m_fit
    return LipschitzResult(m_fit, m_min, max_shift)


def half_level_translate(profile):
    """ξ* where w(0, ·) first crosses 1/2 (leftmost, linear interpolation)."""
    row = profile.w[0]
    below = np.nonzero(row <= 0.5)[0]
    if below.size == 0 or row[0] < 0.5:
        raise DomainError("profile does not cross 1/2 inside the window")
    j = int(below[0])
    if j == 0 or row[j] == 0.5:
        return float(profile.xi[j])
    frac = (row[j - 1] - 0.5) / (row[j - 1] - row[j])
    return float(profile.xi[j - 1] + frac * profile.h)


def normalized(profile):
    """Copy of the profile translated so that w(0, 0) = 1/2."""
    shift = half_level_translate(profile)
    w = sample_rows(profile.w, profile.xi[0], profile.h, profile.xi[None, :] + shift,
                    profile.w[:, 0], profile.w[:, -1], mode="linear")
    return replace(profile, w=w, translate=profile.translate + shift)


def critical_wave(spec, report, frame=DEFAULT_FRAME, offsets=(0.2, 0.1, 0.05, 0.025),
                  tol=1e-8, max_iter=20000):
    """Profiles for c* + offsets, each normalized to w(0,0) = 1/2.

    Returns the profile closest to c*, with the sequence of sup-differences
    between successive normalized profiles and a geometric extrapolation of
    the remaining distance to the limit in `diagnostics`."""
    band = 2.0 * spec.J.radius
    inside = (frame.nodes >= frame.nodes[0] + band) & (frame.nodes <= frame.nodes[-1] - band)
    profiles, diffs = [], []
    for off in offsets:
        c = report.c_star + off
        pair = grid_consistent_pair(spec, report, c, frame=frame)
        prof = normalized(monotone_iterate(spec, c, pair, frame, tol=tol, max_iter=max_iter))
        if profiles:
            diffs.append(float(np.abs(prof.w[:, inside] - profiles[-1].w[:, inside]).max()))
        profiles.append(prof)
    last = profiles[-1]
    ratios = [d2 / d1 for d1, d2 in zip(diffs, diffs[1:]) if d1 > 0]
    extrapolated = math.nan
    if ratios and ratios[-1] < 1:
        extrapolated = diffs[-1] * ratios[-1] / (1.0 - ratios[-1])
    last.diagnostics.update(
        speeds=[p.c for p in profiles],
        cauchy_differences=diffs,
        difference_ratios=ratios,
        extrapolated_distance=extrapolated,
        half_values=[float(np.interp(0.0, p.xi, p.w[0])) for p in profiles],
        iterations_per_speed=[p.iterations for p in profiles],
    )
    last.diagnostics["profiles"] = profiles
    return last
