"""INI configuration files.

Sections and keys (anything else is rejected):

[model]    a_max, n_a, mu, beta, K, K_scale, kernel, sigma, b, r, kernel_file
[wave]     c, L_xi, n_xi, tol, max_iter, branch
[simulate] T, L, h_x, closure, snapshots, u0
[spread]   experiment, rho, c_frac, c_offset, T, L, h_x, rho0, x0, window
[sweep]    K_scale, sigma, a_max  (comma-separated values; the sweep runs
           over their Cartesian product)

Age profiles (mu, beta) accept a number, ``expr:<expression in a>``, or
``file:<csv with columns a, value>`` (interpolated linearly onto the
grid). ``beta = auto`` rescales β ≡ 1 so that ∫βπ = 1. K accepts a number,
``expr:<expression in a, b>`` for K(a, a' = b), or ``file:<csv matrix>``
sampled on the age grid. Expressions see numpy functions by name.
"""

import configparser
import csv
import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ValidationError
from .model import AgeGrid, ModelSpec

SCHEMA = {
    "model": {
        "a_max": float, "n_a": int, "mu": str, "beta": str, "K": str, "K_scale": float,
        "kernel": str, "sigma": float, "b": float, "r": float, "kernel_file": str,
    },
    "wave": {"c": str, "L_xi": float, "n_xi": int, "tol": float, "max_iter": int, "branch": str},
    "simulate": {"T": float, "L": float, "h_x": float, "closure": str, "snapshots": str, "u0": str},
    "spread": {
        "experiment": str, "rho": float, "c_frac": float, "c_offset": float, "T": float,
        "L": float, "h_x": float, "rho0": float, "x0": float, "window": float,
    },
    "sweep": {"K_scale": str, "sigma": str, "a_max": str},
}

DEFAULTS = {
    "model": {"a_max": 1.0, "n_a": 101, "mu": "0", "beta": "auto", "K": "1", "K_scale": 1.0,
              "kernel": "gaussian"},
    "wave": {"c": "critical", "L_xi": 30.0, "n_xi": 1201, "tol": 1e-8, "max_iter": 2000,
             "branch": "maximal"},
    "simulate": {"T": 2.0, "L": 20.0, "h_x": 0.1, "closure": "zero", "snapshots": "",
                 "u0": "expr:1.0 * (abs(x) <= 1)"},
    "spread": {"experiment": "speed", "rho": 0.5, "c_frac": 0.5, "c_offset": 0.3, "T": 35.0,
               "L": 80.0, "h_x": 0.1, "rho0": 0.1, "x0": 0.0, "window": 0.4},
    "sweep": {},
}

KERNEL_KEYS = {"gaussian": ("sigma",), "laplace": ("b",), "compact_bump": ("r",),
               "tabulated": ("kernel_file",)}
SWEEP_KEYS = ("K_scale", "sigma", "a_max")

_NAMESPACE = {name: getattr(np, name) for name in (
    "exp", "log", "sqrt", "sin", "cos", "tanh", "abs", "minimum", "maximum", "where", "pi",
    "heaviside", "clip", "ones_like", "zeros_like")}


@dataclass
class Config:
    sections: dict
    base: Path = field(default_factory=Path.cwd)
    text: str = ""

    def __getitem__(self, section):
        return self.sections[section]

    @property
    def digest(self):
        return hashlib.sha256(self.text.encode()).hexdigest()

    def with_overrides(self, section, **values):
        sections = {k: dict(v) for k, v in self.sections.items()}
        for key, value in values.items():
            if key not in SCHEMA[section]:
                raise ValidationError(f"unknown key [{section}] {key}")
            sections[section][key] = value
        return replace(self, sections=sections)

    def build_model(self):
        return build_model(self["model"], self.base)


def _convert(section, key, raw):
    kind = SCHEMA[section][key]
    try:
        return kind(raw)
    except ValueError:
        raise ValidationError(f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}") from None


def parse(text, base=None):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"malformed configuration: {exc}") from None
    sections = {name: dict(values) for name, values in DEFAULTS.items()}
    for name in parser.sections():
        if name not in SCHEMA:
            raise ValidationError(f"unknown section [{name}]")
        for key, raw in parser.items(name):
            if key not in SCHEMA[name]:
                raise ValidationError(f"unknown key [{name}] {key}")
            sections[name][key] = _convert(name, key, raw)
    family = sections["model"]["kernel"]
    if family not in KERNEL_KEYS:
        raise ValidationError(f"unknown kernel family {family!r}")
    stray = {k for keys in KERNEL_KEYS.values() for k in keys} - set(KERNEL_KEYS[family])
    stray &= set(sections["model"])
    if stray:
        raise ValidationError(f"kernel {family} does not take {sorted(stray)}")
    return Config(sections, Path(base) if base else Path.cwd(), text)


def load(path):
    path = Path(path)
    return parse(path.read_text(), base=path.parent)


def _resolve(base, name):
    p = Path(name)
    return p if p.is_absolute() else base / p


def _evaluate(expr, **variables):
    try:
        return eval(expr, {"__builtins__": {}}, {**_NAMESPACE, **variables})  # noqa: S307
    except Exception as exc:
        raise ValidationError(f"cannot evaluate {expr!r}: {exc}") from None


def age_profile(value, grid, base, name):
    """Samples of an age-dependent coefficient on the grid."""
    value = str(value).strip()
    a = grid.nodes
    if value.startswith("expr:"):
        out = np.broadcast_to(np.asarray(_evaluate(value[5:], a=a), dtype=float), a.shape)
        return np.array(out)
    if value.startswith("file:"):
        with open(_resolve(base, value[5:]), newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or not {"a", "value"} <= set(rows[0]):
            raise ValidationError(f"{name}: expected CSV columns 'a' and 'value'")
        xs = np.array([float(r["a"]) for r in rows])
        ys = np.array([float(r["value"]) for r in rows])
        return np.interp(a, xs, ys)
    try:
        return np.full(a.shape, float(value))
    except ValueError:
        raise ValidationError(f"{name}: cannot interpret {value!r}") from None


def age_matrix(value, grid, base):
    value = str(value).strip()
    a = grid.nodes
    if value.startswith("expr:"):
        out = _evaluate(value[5:], a=a[:, None], b=a[None, :])
        return np.array(np.broadcast_to(np.asarray(out, dtype=float), (a.size, a.size)))
    if value.startswith("file:"):
        matrix = np.loadtxt(_resolve(base, value[5:]), delimiter=",", ndmin=2)
        if matrix.shape != (a.size, a.size):
            raise ValidationError(f"K file has shape {matrix.shape}, expected {(a.size, a.size)}")
        return matrix
    try:
        return np.full((a.size, a.size), float(value))
    except ValueError:
        raise ValidationError(f"K: cannot interpret {value!r}") from None


def build_kernel(model, base):
    family = model["kernel"]
    if family == "tabulated":
        if "kernel_file" not in model:
            raise ValidationError("tabulated kernel needs kernel_file")
        return kernels.from_csv(_resolve(base, model["kernel_file"]))
    params = {k: model[k] for k in KERNEL_KEYS[family] if k in model}
    return kernels.make_kernel(family, **params)


def build_model(model, base=Path(".")):
    grid = AgeGrid(float(model["a_max"]), int(model["n_a"]))
    mu = age_profile(model["mu"], grid, base, "mu")
    auto = str(model["beta"]).strip() == "auto"
    beta = np.ones_like(mu) if auto else age_profile(model["beta"], grid, base, "beta")
    K = float(model["K_scale"]) * age_matrix(model["K"], grid, base)
    J = build_kernel(model, base)
    meta = {k: model[k] for k in sorted(model)}
    return ModelSpec.from_rates(grid, mu, beta, K, J, normalize_beta=auto, meta=meta)


def sweep_points(config):
    """Cartesian product of the [sweep] value lists, in file order."""
    axes = []
    for key in SWEEP_KEYS:
        raw = config["sweep"].get(key, "")
        values = [float(v) for v in str(raw).split(",") if v.strip()]
        if values:
            axes.append((key, values))
    if not axes:
        return []
    points = [{}]
    for key, values in axes:
        points = [{**p, key: v} for p in points for v in values]
    return points


def parse_times(raw):
    return [float(v) for v in str(raw).split(",") if v.strip()]
