"""Dispersal kernels J: built-in families, tabulated kernels, exponential
moments and discrete convolution stencils."""

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, ndimage, signal, special

from .errors import IntegrationError, ValidationError

TAIL_MASS = 1e-12


@dataclass(frozen=True)
class Kernel:
    """A dispersal kernel with its effective support radius.

    `radius` bounds the region outside which the kernel carries less than
    `TAIL_MASS` of its mass; it truncates discrete convolutions.
    `abscissa` is the exponential rate beyond which the moments diverge
    (infinite for Gaussian and compactly supported kernels).
    """

    name: str
    pdf: Callable = field(repr=False, compare=False)
    radius: float
    abscissa: float = math.inf
    compact: bool = False
    params: dict = field(default_factory=dict)

    def __call__(self, y):
        return self.pdf(np.asarray(y, dtype=float))

    def moment(self, lam, order=0):
        """∫ y^order J(y) e^{lam y} dy by adaptive quadrature."""
        lam = float(lam)
        if abs(lam) >= self.abscissa:
            return math.inf

        def integrand(y):
            density = float(self.pdf(np.asarray(y)))
            if density == 0.0:
                return 0.0
            return y ** order * density * math.exp(lam * y)

        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                if self.compact:
                    r = self.radius
                    left, _ = integrate.quad(integrand, -r, 0.0, epsabs=0.0, epsrel=1e-13, limit=400)
                    right, _ = integrate.quad(integrand, 0.0, r, epsabs=0.0, epsrel=1e-13, limit=400)
                else:
                    left, _ = integrate.quad(integrand, -np.inf, 0.0, epsabs=0.0, epsrel=1e-13, limit=400)
                    right, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=400)
            except integrate.IntegrationWarning as exc:
                raise IntegrationError(f"{self.name}: moment({lam}, {order}) failed: {exc}") from exc
        return left + right

    def mgf(self, lam):
        return self.moment(lam, 0)

    def mass(self):
        return self.moment(0.0, 0)

    def stencil(self, h):
        """Convolution weights J(kh)·h for |kh| <= radius, rescaled to unit
        sum so that constants are reproduced exactly."""
        m = int(math.ceil(self.radius / h))
        y = h * np.arange(-m, m + 1)
        w = self.pdf(y) * h
        total = w.sum()
        if not total > 0.0:
            raise ValidationError(f"{self.name}: stencil with spacing {h} has no mass")
        return w / total


def gaussian(sigma=1.0):
    sigma = float(sigma)
    if sigma <= 0:
        raise ValidationError("gaussian sigma must be positive")
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))

    def pdf(y):
        return norm * np.exp(-0.5 * (y / sigma) ** 2)

    radius = sigma * math.sqrt(2.0) * float(special.erfcinv(TAIL_MASS))
    return Kernel("gaussian", pdf, radius, params={"sigma": sigma})


def laplace(b=1.0):
    b = float(b)
    if b <= 0:
        raise ValidationError("laplace scale b must be positive")

    def pdf(y):
        return np.exp(-np.abs(y) / b) / (2.0 * b)

    return Kernel("laplace", pdf, b * math.log(1.0 / TAIL_MASS), abscissa=1.0 / b, params={"b": b})


def compact_bump(r=1.0):
    """C·exp(-1/(1 - (y/r)^2)) on |y| < r."""
    r = float(r)
    if r <= 0:
        raise ValidationError("compact_bump radius must be positive")

    def raw(y):
        y = np.asarray(y, dtype=float)
        z = 1.0 - (y / r) ** 2
        out = np.zeros_like(y)
        inside = z > 0
        out[inside] = np.exp(-1.0 / z[inside])
        return out

    total, _ = integrate.quad(lambda y: float(raw(y)), -r, r, epsabs=0.0, epsrel=1e-13, limit=200)

    def pdf(y):
        return raw(y) / total

    return Kernel("compact_bump", pdf, r, compact=True, params={"r": r})


def tabulated(y, values):
    """Piecewise-linear kernel through the samples, zero outside them."""
    y = np.asarray(y, dtype=float)
    values = np.asarray(values, dtype=float)
    if y.ndim != 1 or y.shape != values.shape or y.size < 3:
        raise ValidationError("tabulated kernel needs matching 1-d samples (>= 3)")
    order = np.argsort(y)
    y, values = y[order], values[order]
    if np.any(np.diff(y) <= 0):
        raise ValidationError("tabulated kernel abscissae must be distinct")

    def pdf(x):
        return np.interp(x, y, values, left=0.0, right=0.0)

    radius = float(max(abs(y[0]), abs(y[-1])))
    return Kernel("tabulated", pdf, radius, compact=True,
                  params={"y": y.tolist(), "J": values.tolist()})


def from_csv(path):
    """Read a tabulated kernel from a CSV file with columns ``y, J``."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"y", "J"} <= set(rows[0]):
        raise ValidationError(f"{path}: expected CSV columns 'y' and 'J'")
    y = [float(r["y"]) for r in rows]
    values = [float(r["J"]) for r in rows]
    return tabulated(y, values)


FAMILIES = {
    "gaussian": (gaussian, ("sigma",)),
    "laplace": (laplace, ("b",)),
    "compact_bump": (compact_bump, ("r",)),
}


def make_kernel(family, **params):
    if family == "tabulated":
        if "path" in params:
            return from_csv(params["path"])
        return tabulated(params["y"], params["J"])
    try:
        factory, names = FAMILIES[family]
    except KeyError:
        raise ValidationError(f"unknown kernel family {family!r}") from None
    unknown = set(params) - set(names)
    if unknown:
        raise ValidationError(f"unknown parameters for {family}: {sorted(unknown)}")
    return factory(**params)


def convolve(u, weights, left=0.0, right=0.0, method="direct"):
    """Discrete J∗u along the last axis with far-field closures.

    `left`/`right` give the values of u beyond the grid: a scalar, one
    value per row, or an array of shape ``(..., m)`` holding the padded
    samples themselves (m = half stencil width).
    """
    u = np.asarray(u, dtype=float)
    m = (len(weights) - 1) // 2
    if m == 0:
        return u * weights[0]
    lead = u.shape[:-1]

    def pad(closure):
        c = np.asarray(closure, dtype=float)
        if c.ndim >= 1 and c.shape[-1] == m and c.shape[:-1] == lead:
            return c
        if c.ndim == 0:
            return np.full(lead + (m,), float(c))
        return np.broadcast_to(c.reshape(lead + (1,)), lead + (m,))

    ext = np.concatenate([pad(left), u, pad(right)], axis=-1)
    if method == "direct":
        out = ndimage.correlate1d(ext, weights, axis=-1, mode="constant", cval=0.0)
        return out[..., m:-m]
    if method == "fft":
        w = weights.reshape((1,) * len(lead) + (-1,))
        return signal.fftconvolve(ext, w[..., ::-1], mode="valid", axes=-1)
    raise ValueError(f"unknown convolution method {method!r}")
