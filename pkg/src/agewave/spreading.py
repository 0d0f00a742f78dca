"""Spreading experiments on the initial-value problem: front tracking and
speed fits, the auxiliary KPP constants, the exponential outer bound, the
hair-trigger lower bound and the inner sub-solution φ(a)v(t,x)."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import cauchy, kernels
from ._numerics import golden_section
from .errors import ComparisonError, CrossValidationError, EstimationError, ValidationError

DEFAULT_WINDOW = 0.4


def _slice(u, age_grid, kind):
    if kind == "max":
        return u.max(axis=0)
    if kind == "mean":
        return age_grid.integrate(u, axis=0) / age_grid.a_max
    raise ValidationError("slice must be 'max' or 'mean'")


def front_position(values, x, rho):
    """Rightmost and leftmost crossings of level rho by a 1-d profile,
    interpolated linearly between adjacent nodes. A level never attained
    gives (None, None); a level held at an edge node gives that edge."""
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    above = np.nonzero(values >= rho)[0]
    if above.size == 0:
        return None, None
    jr, jl = int(above[-1]), int(above[0])
    if jr == values.size - 1:
        xp = float(x[-1])
    else:
        frac = (values[jr] - rho) / (values[jr] - values[jr + 1])
        xp = float(x[jr] + frac * (x[jr + 1] - x[jr]))
    if jl == 0:
        xm = float(x[0])
    else:
        frac = (values[jl] - rho) / (values[jl] - values[jl - 1])
        xm = float(x[jl] - frac * (x[jl] - x[jl - 1]))
    return xp, xm


def field_front(field_, rho=0.5, kind="max"):
    return front_position(_slice(field_.u, field_.age_grid, kind), field_.space_grid.nodes, rho)


@dataclass
class FrontTrack:
    rho: float
    t: np.ndarray
    x_plus: np.ndarray
    x_minus: np.ndarray
    kind: str = "max"
    c_hat: float = math.nan
    c_left: float = math.nan
    stderr: float = math.nan
    window_start: float = math.nan

    def rows(self):
        for t, xp, xm in zip(self.t, self.x_plus, self.x_minus):
            yield t, xp, xm


class FrontRecorder:
    """Observer for cauchy.run that records front positions every
    `every` steps."""

    def __init__(self, rho=0.5, kind="max", every=1):
        self.rho, self.kind, self.every = rho, kind, every
        self.t, self.xp, self.xm = [], [], []
        self._count = 0

    def __call__(self, field_):
        if self._count % self.every == 0:
            xp, xm = field_front(field_, self.rho, self.kind)
            self.t.append(field_.t)
            self.xp.append(math.nan if xp is None else xp)
            self.xm.append(math.nan if xm is None else xm)
        self._count += 1

    def track(self):
        return FrontTrack(self.rho, np.array(self.t), np.array(self.xp), np.array(self.xm), self.kind)


@dataclass
class SpeedEstimate:
    c_right: float
    c_left: float
    stderr_right: float
    stderr_left: float
    n_points: int

    @property
    def asymmetry(self):
        return abs(self.c_right - self.c_left)


def estimate_speed(track, window=DEFAULT_WINDOW, min_points=10):
    """Least-squares slopes of x⁺(t) and −x⁻(t) after discarding the first
    `window` fraction of the recorded time span."""
    t = np.asarray(track.t, dtype=float)
    if t.size == 0:
        raise EstimationError("empty front track")
    t0 = t[0] + window * (t[-1] - t[0])
    keep = (t >= t0) & np.isfinite(track.x_plus) & np.isfinite(track.x_minus)
    if keep.sum() < min_points:
        raise EstimationError(f"only {int(keep.sum())} usable points in the fit window")
    right = stats.linregress(t[keep], np.asarray(track.x_plus)[keep])
    left = stats.linregress(t[keep], -np.asarray(track.x_minus)[keep])
    est = SpeedEstimate(float(right.slope), float(left.slope), float(right.stderr),
                        float(left.stderr), int(keep.sum()))
    track.c_hat, track.c_left, track.stderr, track.window_start = est.c_right, est.c_left, est.stderr_right, t0
    return est


@dataclass
class KppReference:
    lambda0: float
    Phi_min: float
    P: float
    c0: float
    lambda_min: float

    def to_dict(self):
        return dict(lambda0=self.lambda0, Phi_min=self.Phi_min, P=self.P, c0=self.c0,
                    lambda_min=self.lambda_min)


def c0_objective(J, lambda0):
    return lambda lam: (J.mgf(lam) - 1.0 + lambda0) / lam


def kpp_reference(spec, report, rtol=1e-6, lo=1e-4):
    """λ0 = −s0, Φ_min = min_a ∫Kπ, P = sup_a ∫Kπφ / λ0 and
    c0 = inf_{λ>0} (mgf(λ) − 1 + λ0)/λ by golden-section search; c0 must
    reproduce the critical speed."""
    J = spec.J
    lambda0 = -report.s0
    phi_min = spec.Phi_min
    P = float((spec.Kpi_w @ report.phi).max()) / lambda0
    f = c0_objective(J, lambda0)
    cap = J.abscissa
    hi = 1.0 if not math.isfinite(cap) else 0.5 * cap
    for _ in range(200):
        if f(hi) > f(0.5 * hi):
            break
        hi = 2.0 * hi if not math.isfinite(cap) else 0.5 * (hi + cap)
    lam, c0 = golden_section(f, lo, hi, xtol=1e-12)
    if abs(c0 - report.c_star) > rtol * report.c_star:
        raise CrossValidationError(f"c0 = {c0:.12g} differs from c* = {report.c_star:.12g}")
    return KppReference(lambda0, phi_min, P, c0, lam)


@dataclass
class OuterBound:
    c: float
    lam: float
    v0: float
    worst_margin: float
    outside_sup: list = field(default_factory=list)


def outer_bound_amplitude(u0, x, phi, lam):
    """Smallest v0 with u0(a,x) ≤ v0 e^{−λx} φ(a) on the grid."""
    ratio = np.asarray(u0) * np.exp(lam * x)[None, :] / phi[:, None]
    return float(ratio.max())


def outer_bound_check(trajectory, spec, report, c, v0_amp=None, tol=1e-8):
    """u(t,a,x) ≤ v0 e^{−λ(x−ct)} φ(a) at every snapshot, where λ is the
    smaller root of Λ(λ,c) = s0 for c > c*. Also records the sup of the
    age-max slice over |x| ≥ ct."""
    lam, _ = report.roots(c)
    x = trajectory.snapshots[0].space_grid.nodes
    phi = report.phi
    if v0_amp is None:
        v0_amp = outer_bound_amplitude(trajectory.snapshots[0].u, x, phi, lam)
    worst = math.inf
    outside = []
    for f in trajectory.snapshots:
        bound = v0_amp * np.exp(-lam * (x - c * f.t))[None, :] * phi[:, None]
        worst = min(worst, float((bound - f.u).min()))
        far = np.abs(x) >= c * f.t
        outside.append(float(f.u.max(axis=0)[far].max()) if far.any() else 0.0)
    result = OuterBound(c, lam, v0_amp, worst, outside)
    if worst < -tol:
        raise ComparisonError(f"outer bound violated by {-worst:.3g}")
    return result


class KppStepper:
    """Explicit Euler for w_t = J∗w − w + r w(1 − P w) on the space grid,
    with the same time step and zero closure as the full problem."""

    def __init__(self, spec, space_grid, rate, P=1.0, closure="zero"):
        self.dt = spec.age_grid.step
        self.rate, self.P, self.closure = rate, P, closure
        self.weights = spec.J.stencil(space_grid.step)

    def advance(self, w):
        if self.closure == "zero":
            conv = kernels.convolve(w, self.weights, 0.0, 0.0)
        else:
            conv = kernels.convolve(w, self.weights, w[0], w[-1])
        return w + self.dt * (conv - w + self.rate * w * (1.0 - self.P * w))


@dataclass
class HairTrigger:
    x0: float
    T: float
    worst_margin: float
    steps: int


def hair_trigger_check(spec, space_grid, rho0, rho, x0=0.0, T_max=60.0, tol=1e-12):
    """Run the full problem from ρ0·1_{[x0−1,x0+1]} (all ages) beside the
    auxiliary problem w_t = J∗w − w + Φ_min w(1−w) from the same data.
    Returns the first time min over ages and [x0−1, x0+1] of u reaches ρ;
    the auxiliary solution must stay below u at every step."""
    x = space_grid.nodes
    patch = (x >= x0 - 1.0 - 1e-12) & (x <= x0 + 1.0 + 1e-12)
    w = np.where(patch, rho0, 0.0)
    u = np.broadcast_to(w, (spec.age_grid.n_a, x.size)).copy()
    if rho <= rho0:
        return HairTrigger(x0, 0.0, 0.0, 0)
    full = cauchy.Stepper(spec, space_grid)
    aux = KppStepper(spec, space_grid, spec.Phi_min)
    n_max = int(round(T_max / full.dt))
    worst = 0.0
    for k in range(1, n_max + 1):
        u = full.advance(u)
        w = aux.advance(w)
        worst = min(worst, float((u - w[None, :]).min()))
        if worst < -tol:
            raise ComparisonError(f"auxiliary solution exceeds u by {-worst:.3g} at t = {k * full.dt:.6g}")
        if u[:, patch].min() >= rho:
            return HairTrigger(x0, k * full.dt, worst, k)
    raise EstimationError(f"level {rho} not reached on the patch by T = {T_max}")


@dataclass
class InnerSpreading:
    c_frac: float
    T: float
    interior_min: float
    worst_margin: float
    v_max: float
    cap: float
    passed: bool


def inner_spreading_check(spec, report, space_grid, c_frac, T, u0=None, eps_target=0.05,
                          snapshot_every=1.0, tol=1e-12):
    """Compare the solution from compact data with û(t,a,x) = φ(a)v(t,x),
    where v_t = J∗v − v + λ0 v(1 − P v) starts from a tent of height
    min(1, 1/P) on [−1, 1] (so φv0 ≤ u0 for u0 = 1 on [−1, 1]).

    Checks û ≤ u at every step, v ≤ 1/P throughout, and that
    min{u(T,a,x) : |x| ≤ c_frac·c*·T} ≥ 1 − eps_target."""
    x = space_grid.nodes
    if u0 is None:
        u0 = np.broadcast_to((np.abs(x) <= 1.0 + 1e-12).astype(float), (spec.age_grid.n_a, x.size))
    u = cauchy.initial_field(u0, spec, space_grid).u
    kpp = kpp_reference(spec, report)
    cap = 1.0 / kpp.P
    v = min(1.0, cap) * np.maximum(0.0, 1.0 - np.abs(x))
    phi = report.phi[:, None]
    if float((u - phi * v[None, :]).min()) < -tol:
        raise ValidationError("initial data do not dominate φ·v0")
    full = cauchy.Stepper(spec, space_grid)
    aux = KppStepper(spec, space_grid, kpp.lambda0, kpp.P)
    worst, v_max = 0.0, float(v.max())
    for _ in range(int(round(T / full.dt))):
        u = full.advance(u)
        v = aux.advance(v)
        worst = min(worst, float((u - phi * v[None, :]).min()))
        v_max = max(v_max, float(v.max()))
    if worst < -tol:
        raise ComparisonError(f"φ·v exceeds u by {-worst:.3g}")
    inside = np.abs(x) <= c_frac * report.c_star * T
    interior = float(u[:, inside].min())
    return InnerSpreading(c_frac, T, interior, worst, v_max, cap, interior >= 1.0 - eps_target)


@dataclass
class SpreadingRun:
    track: FrontTrack
    trajectory: object
    estimate: SpeedEstimate


def spreading_run(spec, space_grid, T, u0=None, rho=0.5, kind="max", sample_every=1.0,
                  window=DEFAULT_WINDOW, record_every=1):
    """Compact data u0 = 1 on |x| ≤ 1 (all ages) by default; fronts are
    recorded every `record_every` steps and snapshots kept every
    `sample_every` time units."""
    x = space_grid.nodes
    if u0 is None:
        u0 = lambda a, xx: (np.abs(xx) <= 1.0 + 1e-12).astype(float) + 0.0 * a  # noqa: E731
    rec = FrontRecorder(rho, kind, record_every)
    dt = spec.age_grid.step
    n_samples = int(round(T / sample_every))
    times = [round(k * sample_every / dt) * dt for k in range(n_samples + 1)]
    traj = cauchy.run(u0, spec, space_grid, T, sample_times=times, observer=rec)
    track = rec.track()
    est = estimate_speed(track, window)
    del x
    return SpreadingRun(track, traj, est)
