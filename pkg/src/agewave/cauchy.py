"""Initial-value problem

    u_t + u_a = J∗u − u + (∫K(a,a')π(a')u(a') da') (1 − u),
    u(t, 0, x) = ∫γ(a) u(t, a, x) da,

stepped along characteristics with dt = Δa, plus the checks built on it:
the variation-of-constants representation, the space-free limit ODE and
the comparison principle.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import kernels
from .errors import (InvarianceError, ModelInconsistencyError, NonConvergenceError,
                     StabilityError, ValidationError)

RANGE_TOL = 1e-8
CLOSURES = ("zero", "edge")


@dataclass(eq=False)
class Field:
    t: float
    u: np.ndarray = field(repr=False)
    age_grid: object = field(repr=False)
    space_grid: object = field(repr=False)

    def age_max(self):
        return self.u.max(axis=0)

    def age_mean(self):
        return self.age_grid.integrate(self.u, axis=0) / self.age_grid.a_max


@dataclass(eq=False)
class Trajectory:
    snapshots: list
    dt: float
    closure: str
    cfl: float
    min_value: float
    max_value: float
    history: list = field(default=None, repr=False)

    @property
    def times(self):
        return np.array([f.t for f in self.snapshots])

    def at(self, t):
        for f in self.snapshots:
            if abs(f.t - t) <= 1e-9 * max(1.0, abs(t)):
                return f
        raise KeyError(f"no snapshot at t = {t}")


class Stepper:
    """Precomputed stencil and closure for repeated steps on one grid."""

    def __init__(self, spec, space_grid, dt=None, closure="zero", method="direct"):
        if closure not in CLOSURES:
            raise ValidationError(f"closure must be one of {CLOSURES}")
        da = spec.age_grid.step
        dt = da if dt is None else float(dt)
        if abs(dt - da) > 1e-12 * da:
            raise ValidationError(f"dt = {dt} must equal the age step {da}")
        self.cfl = dt * (1.0 + spec.M)
        if self.cfl > 1.0 + 1e-12:
            raise StabilityError(f"dt·(1+M) = {self.cfl:.6g} > 1")
        self.spec = spec
        self.space_grid = space_grid
        self.dt = dt
        self.closure = closure
        self.method = method
        self.weights = spec.J.stencil(space_grid.step)
        gw = spec.gamma_w
        self.renewal = gw[1:] / (1.0 - gw[0])

    def convolve(self, u):
        if self.closure == "zero":
            return kernels.convolve(u, self.weights, 0.0, 0.0, method=self.method)
        return kernels.convolve(u, self.weights, u[..., 0], u[..., -1], method=self.method)

    def rhs(self, u):
        return self.convolve(u) - u + (self.spec.Kpi_w @ u) * (1.0 - u)

    def advance(self, u):
        new = np.empty_like(u)
        new[1:] = u[:-1] + self.dt * self.rhs(u)[:-1]
        new[0] = self.renewal @ new[1:]
        return new


def _check_range(u, t):
    lo, hi = float(u.min()), float(u.max())
    if lo < -RANGE_TOL or hi > 1.0 + RANGE_TOL or not np.all(np.isfinite(u)):
        raise InvarianceError(f"state left [0, 1] at t = {t:.6g}: min {lo:.3g}, max {hi:.3g}")
    return lo, hi


def step(field_, spec, dt=None, closure="zero", method="direct"):
    """One characteristic step: transport by one age node and explicit
    Euler for the right-hand side, then the renewal row solved from the
    new rows (the a=0 term of the quadrature moved to the left side)."""
    stepper = Stepper(spec, field_.space_grid, dt, closure, method)
    new = stepper.advance(field_.u)
    _check_range(new, field_.t + stepper.dt)
    return Field(field_.t + stepper.dt, new, field_.age_grid, field_.space_grid)


def initial_field(u0, spec, space_grid):
    """Sample `u0` (array n_a×n_x, callable u0(a, x) or scalar)."""
    a = spec.nodes[:, None]
    x = space_grid.nodes[None, :]
    if callable(u0):
        u = np.asarray(u0(a, x), dtype=float)
    else:
        u = np.asarray(u0, dtype=float)
    u = np.broadcast_to(u, (a.size, x.size)).astype(float).copy()
    if np.any(u < 0) or np.any(u > 1) or not np.all(np.isfinite(u)):
        raise ValidationError("initial data must lie in [0, 1]")
    return Field(0.0, u, spec.age_grid, space_grid)


def _step_count(t, dt, what):
    n = t / dt
    k = int(round(n))
    if abs(n - k) > 1e-6:
        raise ValidationError(f"{what} {t} is not a multiple of dt = {dt}")
    return k


def run(u0, spec, space_grid, T, sample_times=None, closure="zero", method="direct",
        keep_history=False, observer=None):
    """Step from u0 to time T, keeping snapshots at `sample_times`
    (default: 0 and T). `observer(field)` is called after every step."""
    stepper = Stepper(spec, space_grid, None, closure, method)
    dt = stepper.dt
    n_steps = _step_count(T, dt, "T")
    times = [0.0, T] if sample_times is None else sorted(set(float(t) for t in sample_times))
    wanted = {_step_count(t, dt, "sample time"): t for t in times}
    if max(wanted) > n_steps:
        raise ValidationError("sample times beyond T")
    cur = u0 if isinstance(u0, Field) else initial_field(u0, spec, space_grid)
    lo, hi = _check_range(cur.u, 0.0)
    snaps = [cur] if 0 in wanted else []
    history = [cur] if keep_history else None
    u = cur.u
    for k in range(1, n_steps + 1):
        u = stepper.advance(u)
        t = k * dt
        l, h = _check_range(u, t)
        lo, hi = min(lo, l), max(hi, h)
        f = Field(t, u, spec.age_grid, space_grid)
        if k in wanted:
            snaps.append(f)
        if keep_history:
            history.append(f)
        if observer is not None:
            observer(f)
    return Trajectory(snaps, dt, closure, stepper.cfl, lo, hi, history)


def space_free_run(spec, theta, T):
    """Age-only version of the stepper for x-independent data, where the
    convolution of a constant is the constant. Returns u(T, ·)."""
    dt = spec.age_grid.step
    n_steps = _step_count(T, dt, "T")
    u = np.broadcast_to(np.asarray(theta, dtype=float), spec.nodes.shape).astype(float).copy()
    gw = spec.gamma_w
    for _ in range(n_steps):
        growth = (spec.Kpi_w @ u) * (1.0 - u)
        new = np.empty_like(u)
        new[1:] = u[:-1] + dt * growth[:-1]
        new[0] = gw[1:] @ new[1:] / (1.0 - gw[0])
        u = new
    return u


def _semigroup(v, tau, weights, closure, tol=1e-12, max_terms=500):
    """e^{(T−I)τ} v = e^{−τ} Σ τⁿ/n! Tⁿ v for the discrete convolution T."""
    out = np.zeros_like(v)
    term = v.copy()
    coef = math.exp(-tau)
    for n in range(max_terms):
        out += coef * term
        if n >= tau and coef < tol:
            return out, n + 1, True
        if closure == "zero":
            term = kernels.convolve(term, weights, 0.0, 0.0)
        else:
            term = kernels.convolve(term, weights, term[..., 0], term[..., -1])
        coef *= tau / (n + 1)
    return out, max_terms, False


@dataclass
class RenewalCheck:
    t: float
    defect: float
    series_converged: bool
    max_terms: int


def renewal_formula_check(trajectory, spec, t, closure=None):
    """Compare the stepped solution at time t with the variation-of-constants
    representation along each characteristic,

        a ≥ t:  u(t,a) = S(t) u0(a−t) + ∫_0^t S(t−s) f(s, a−t+s) ds,
        a < t:  u(t,a) = S(a) u(t−a, 0) + ∫_0^a S(a−s) f(t−a+s, s) ds,

    with S(τ) = e^{(T−I)τ} by its exponential series and f the
    transmission term evaluated on the stored history (trapezoid in s).
    Needs a trajectory run with keep_history=True."""
    hist = trajectory.history
    if hist is None:
        raise ValidationError("renewal_formula_check needs a trajectory with history")
    closure = closure or trajectory.closure
    dt = trajectory.dt
    n = _step_count(t, dt, "t")
    if n >= len(hist):
        raise ValidationError("t beyond the stored history")
    weights = spec.J.stencil(hist[0].space_grid.step)
    S_dt = lambda v: _semigroup(v, dt, weights, closure)  # noqa: E731
    forcing = [(spec.Kpi_w @ f.u) * (1.0 - f.u) for f in hist[: n + 1]]
    target = hist[n].u
    n_a = spec.age_grid.n_a
    worst, converged, terms = 0.0, True, 0
    for i in range(n_a):
        if i >= n:
            points = [(k, i - n + k) for k in range(n + 1)]
            start = hist[0].u[i - n]
        else:
            points = [(n - i + k, k) for k in range(i + 1)]
            start = hist[n - i].u[0]
        N = len(points) - 1
        acc = start.copy()
        if N > 0:
            k0, j0 = points[0]
            acc = acc + 0.5 * dt * forcing[k0][j0]
            for idx, (k, j) in enumerate(points[1:], start=1):
                acc, used, ok = S_dt(acc)
                converged &= ok
                terms = max(terms, used)
                w = 0.5 if idx == N else 1.0
                acc = acc + w * dt * forcing[k][j]
        worst = max(worst, float(np.abs(acc - target[i]).max()))
    return RenewalCheck(t, worst, converged, terms)


@dataclass
class SteadyScanResult:
    equilibria: list
    residuals: list
    labels: dict
    guesses: list

    def constant_levels(self):
        return [float(np.mean(e)) for e in self.equilibria]


def _limit_residual(spec, u):
    """Residual of u' = G(u)(1−u), u(0) = ∫γu in integrated form."""
    G = spec.Kpi_w @ u
    integrated = 1.0 - (1.0 - u[0]) * np.exp(-cumulative_trapezoid(G, spec.nodes, initial=0.0))
    return max(float(np.abs(u - integrated).max()), abs(float(u[0] - spec.gamma_w @ u)))


def steady_state_scan(spec, n_guesses=9, tol=1e-13, max_iter=10000, dedupe=1e-7):
    """Fixed-point iteration for the x-independent steady states from
    constant guesses θ ∈ {0, 1} ∪ (n_guesses interior values).

    For a given transmission integral G the ODE u' = G(1−u) integrates
    exactly to 1 − u = (1 − u(0)) exp(−∫G); each pass recomputes G from
    the previous profile (Picard) and resets u(0) = ∫γu."""
    a = spec.nodes
    interior = list(np.linspace(0.0, 1.0, n_guesses + 2)[1:-1])
    guesses = [0.0, 1.0] + [float(g) for g in interior]
    found, residuals, labels = [], [], {}
    for theta in guesses:
        u = np.full(a.shape, theta)
        for _ in range(max_iter):
            G = spec.Kpi_w @ u
            b = float(spec.gamma_w @ u)
            new = 1.0 - (1.0 - b) * np.exp(-cumulative_trapezoid(G, a, initial=0.0))
            diff = float(np.abs(new - u).max())
            u = new
            if diff < tol:
                break
        else:
            raise NonConvergenceError(f"steady-state iteration from θ = {theta} did not converge")
        idx = next((k for k, e in enumerate(found) if np.abs(e - u).max() < dedupe), None)
        if idx is None:
            found.append(u)
            residuals.append(_limit_residual(spec, u))
            idx = len(found) - 1
        labels[theta] = idx
    levels = sorted(float(np.mean(e)) for e in found)
    result = SteadyScanResult(found, residuals, labels, guesses)
    if len(found) != 2 or abs(levels[0]) > dedupe or abs(levels[1] - 1.0) > dedupe:
        raise ModelInconsistencyError(f"unexpected equilibria with mean levels {levels}")
    return result


@dataclass
class ComparisonReport:
    ordered: bool
    worst_margin: float
    tol: float = 1e-10

    def __bool__(self):
        return self.ordered


def comparison_check(u0, v0, spec, space_grid, T, closure="zero", tol=1e-10):
    """Run both data with identical stepping; ordered when u ≤ v + tol at
    every step."""
    stepper = Stepper(spec, space_grid, None, closure)
    u = initial_field(u0, spec, space_grid).u
    v = initial_field(v0, spec, space_grid).u
    worst = float((v - u).min())
    for _ in range(_step_count(T, stepper.dt, "T")):
        u = stepper.advance(u)
        v = stepper.advance(v)
        worst = min(worst, float((v - u).min()))
    return ComparisonReport(worst >= -tol, worst, tol)
