"""Problem data: age grid, demography (mu, beta, pi, gamma), transmission
kernel K and dispersal kernel J, with derived quadrature quantities and
assumption checks."""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import kernels
from ._numerics import age_weights
from .errors import IntegrationError, NormalizationError, ValidationError

NORMALIZATION_TOL = 1e-4
MASS_TOL = 1e-8
SYMMETRY_TOL = 1e-12
DEFAULT_PROBES = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class AgeGrid:
    a_max: float
    n_a: int

    def __post_init__(self):
        if not self.a_max > 0:
            raise ValidationError("a_max must be positive")
        if int(self.n_a) != self.n_a or self.n_a < 3:
            raise ValidationError("n_a must be an integer >= 3")

    @cached_property
    def nodes(self):
        return np.linspace(0.0, self.a_max, self.n_a)

    @property
    def step(self):
        return self.a_max / (self.n_a - 1)

    @cached_property
    def weights(self):
        return age_weights(self.n_a, self.step)

    def integrate(self, values, axis=-1):
        return np.tensordot(np.asarray(values, dtype=float), self.weights, axes=([axis], [0]))

    def interpolate(self, values, a):
        """Piecewise-linear interpolation of node samples."""
        return np.interp(a, self.nodes, values)


@dataclass(frozen=True)
class SpaceGrid:
    half_width: float
    n_x: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValidationError("half_width must be positive")
        if int(self.n_x) != self.n_x or self.n_x < 3:
            raise ValidationError("n_x must be an integer >= 3")

    @cached_property
    def nodes(self):
        return np.linspace(-self.half_width, self.half_width, self.n_x)

    @property
    def step(self):
        return 2.0 * self.half_width / (self.n_x - 1)

    @classmethod
    def from_spacing(cls, half_width, h):
        n = 2.0 * half_width / h
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValidationError(f"spacing {h} does not divide [-{half_width}, {half_width}]")
        return cls(half_width, int(round(n)) + 1)


def _sample(values, nodes, name):
    """Accept a scalar, a callable of age, or node samples."""
    if callable(values):
        out = np.asarray(values(nodes), dtype=float)
        out = np.broadcast_to(out, nodes.shape).copy()
    else:
        out = np.asarray(values, dtype=float)
        if out.ndim == 0:
            out = np.full(nodes.shape, float(out))
    if out.shape != nodes.shape:
        raise ValidationError(f"{name}: expected {nodes.size} samples, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{name}: non-finite samples")
    return out


def _sample_matrix(K, nodes):
    n = nodes.size
    if callable(K):
        out = np.asarray(K(nodes[:, None], nodes[None, :]), dtype=float)
        out = np.broadcast_to(out, (n, n)).copy()
    else:
        out = np.asarray(K, dtype=float)
        if out.ndim == 0:
            out = np.full((n, n), float(out))
    if out.shape != (n, n):
        raise ValidationError(f"K: expected a {n}x{n} matrix, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValidationError("K: non-finite entries")
    return out


def build_survival(mu, grid):
    """pi(a) = exp(-∫_0^a mu) by cumulative trapezoid."""
    mu = _sample(mu, grid.nodes, "mu")
    if np.any(mu < 0):
        raise ValidationError("mu must be nonnegative")
    return np.exp(-cumulative_trapezoid(mu, grid.nodes, initial=0.0))


def build_gamma(beta, pi, grid, tol=NORMALIZATION_TOL):
    """gamma = beta·pi and its integral; raises if the integral is not 1."""
    beta = _sample(beta, grid.nodes, "beta")
    pi = _sample(pi, grid.nodes, "pi")
    if np.any(beta < 0):
        raise ValidationError("beta must be nonnegative")
    if np.any(pi <= 0):
        raise ValidationError("pi must be positive")
    gamma = beta * pi
    total = float(grid.integrate(gamma))
    if abs(total - 1.0) > tol:
        raise NormalizationError(f"∫gamma = {total:.12g}, expected 1 (tolerance {tol:g})")
    return gamma, total


def demography_residual(beta, mu, grid):
    """|∫ beta(a) exp(-∫_0^a mu) da - 1|."""
    beta = _sample(beta, grid.nodes, "beta")
    pi = build_survival(mu, grid)
    return abs(float(grid.integrate(beta * pi)) - 1.0)


def mgf_J(J, lam):
    """∫ J(y) e^{lam y} dy."""
    return J.mgf(lam)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Sampled problem data on an age grid.

    Construction only checks shapes and finiteness; `validate_assumptions`
    reports on the structural hypotheses, so diagnostic models (e.g. K ≡ 0)
    can still be built.
    """

    age_grid: AgeGrid
    pi: np.ndarray
    gamma: np.ndarray
    K: np.ndarray
    J: kernels.Kernel
    mu: np.ndarray = None
    beta: np.ndarray = None
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_rates(cls, age_grid, mu, beta, K, J, *, normalize_beta=False, meta=None):
        pi = build_survival(mu, age_grid)
        beta = _sample(beta, age_grid.nodes, "beta")
        if normalize_beta:
            total = float(age_grid.integrate(beta * pi))
            if not total > 0:
                raise ValidationError("beta·pi has zero integral; cannot normalize")
            beta = beta / total
        gamma, _ = build_gamma(beta, pi, age_grid)
        mu = _sample(mu, age_grid.nodes, "mu")
        return cls(age_grid, pi, gamma, _sample_matrix(K, age_grid.nodes), J, mu=mu, beta=beta,
                   meta=dict(meta or {}))

    @classmethod
    def from_survival(cls, age_grid, pi, gamma, K, J, *, meta=None):
        nodes = age_grid.nodes
        return cls(age_grid, _sample(pi, nodes, "pi"), _sample(gamma, nodes, "gamma"),
                   _sample_matrix(K, nodes), J, meta=dict(meta or {}))

    def with_K(self, K):
        return ModelSpec(self.age_grid, self.pi, self.gamma, _sample_matrix(K, self.age_grid.nodes),
                         self.J, mu=self.mu, beta=self.beta, meta=self.meta)

    @property
    def nodes(self):
        return self.age_grid.nodes

    @property
    def weights(self):
        return self.age_grid.weights

    @cached_property
    def gamma_integral(self):
        return float(self.age_grid.integrate(self.gamma))

    @cached_property
    def gamma_w(self):
        """Renewal weights gamma_i·w_i, rescaled to sum exactly to 1."""
        gw = self.gamma * self.weights
        total = gw.sum()
        return gw / total if total > 0 else gw

    @cached_property
    def Kpi_w(self):
        """Matrix of K(a_i, a_j)·pi(a_j)·w_j: applying it to samples u(a_j)
        gives the age quadrature of ∫ K(a_i, a') pi(a') u(a') da'."""
        return self.K * (self.pi * self.weights)[None, :]

    @cached_property
    def Kint(self):
        """∫ K(a, a') pi(a') da' at every node."""
        return self.Kpi_w.sum(axis=1)

    @property
    def M(self):
        return float(self.Kint.max())

    @property
    def Phi_min(self):
        return float(self.Kint.min())


def reference_model(kappa=1.0, sigma=1.0, n_a=101, a_max=1.0):
    """Constant coefficients: pi ≡ 1, gamma ≡ 1/a_max, K ≡ kappa, Gaussian J."""
    grid = AgeGrid(a_max, n_a)
    meta = {"name": "reference", "kappa": kappa, "sigma": sigma}
    return ModelSpec.from_rates(grid, 0.0, 1.0 / a_max, kappa, kernels.gaussian(sigma), meta=meta)


@dataclass
class CheckItem:
    passed: bool
    residual: float
    detail: str = ""

    def to_dict(self):
        return {"passed": bool(self.passed), "residual": float(self.residual), "detail": self.detail}


@dataclass
class AssumptionReport:
    items: dict

    @property
    def passed(self):
        return all(item.passed for item in self.items.values())

    def failures(self):
        return [name for name, item in self.items.items() if not item.passed]

    def to_dict(self):
        return {"passed": self.passed, "items": {k: v.to_dict() for k, v in self.items.items()}}


def validate_assumptions(spec, probes=DEFAULT_PROBES, tol=NORMALIZATION_TOL):
    """Check the four structural hypotheses on the sampled data.

    (i) gamma ≥ 0 with unit integral; (ii) pi > 0 and gamma·pi ≢ 0;
    (iii) J ≥ 0, symmetric, unit mass, J(0) > 0, finite exponential moments
    at the probe rates; (iv) K > 0.
    """
    items = {}
    gmin = float(spec.gamma.min())
    dev = abs(spec.gamma_integral - 1.0)
    items["i"] = CheckItem(gmin >= 0 and dev <= tol, dev,
                           f"min gamma = {gmin:.3g}, ∫gamma = {spec.gamma_integral:.12g}")

    pmin = float(spec.pi.min())
    gp = float(spec.age_grid.integrate(spec.gamma * spec.pi))
    items["ii"] = CheckItem(pmin > 0 and gp > 0, pmin, f"min pi = {pmin:.3g}, ∫gamma·pi = {gp:.6g}")

    items["iii"] = _check_kernel(spec.J, probes)

    kmin = float(spec.K.min())
    items["iv"] = CheckItem(kmin > 0, kmin, f"min K = {kmin:.6g}")
    return AssumptionReport(items)


def _check_kernel(J, probes):
    problems = []
    r = J.radius
    y = np.linspace(0.0, r, 2001)
    plus, minus = J(y), J(-y)
    if np.any(plus < 0) or np.any(minus < 0):
        problems.append("negative values")
    asym = float(np.max(np.abs(plus - minus)))
    if asym > SYMMETRY_TOL * max(1.0, float(np.max(plus))):
        problems.append(f"asymmetric (max |J(y)-J(-y)| = {asym:.3g})")
    if not float(J(0.0)) > 0:
        problems.append("J(0) = 0")
    residual = asym
    try:
        mass = J.mass()
        residual = max(residual, abs(mass - 1.0))
        if abs(mass - 1.0) > MASS_TOL:
            problems.append(f"mass {mass:.12g}")
    except IntegrationError as exc:
        problems.append(str(exc))
    for lam in probes:
        for sgn in (1.0, -1.0):
            try:
                value = J.mgf(sgn * lam)
            except IntegrationError:
                value = math.inf
            if not math.isfinite(value):
                problems.append(f"infinite exponential moment at {sgn * lam:g}")
    return CheckItem(not problems, residual, "; ".join(problems) or "ok")
