import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from agewave import cauchy, model
from agewave.errors import InvarianceError, ModelInconsistencyError, StabilityError, ValidationError
from agewave.model import SpaceGrid

MICRO = SpaceGrid(4.0, 41)


@pytest.fixture(scope="module")
def micro_spec():
    return model.reference_model(n_a=21)


@pytest.mark.parametrize("value,closure", [(0.0, "zero"), (0.0, "edge"), (1.0, "edge")])
def test_equilibria_are_fixed(r1, value, closure):
    traj = cauchy.run(value, r1, MICRO, 0.5, closure=closure)
    assert np.abs(traj.snapshots[-1].u - value).max() <= 1e-14


def test_one_step_matches_direct_evaluation():
    spec = model.reference_model(n_a=5)
    grid = SpaceGrid(3.0, 7)
    x = grid.nodes
    u0 = np.broadcast_to((np.abs(x) <= 1.0).astype(float), (5, 7)).copy()
    f = cauchy.step(cauchy.initial_field(u0, spec, grid), spec)
    w = spec.J.stencil(grid.step)
    m = (len(w) - 1) // 2
    dt = spec.age_grid.step
    expected = np.zeros((5, 7))
    for i in range(1, 5):
        for j in range(7):
            conv = sum(w[k + m] * u0[i - 1, j + k] for k in range(-m, m + 1) if 0 <= j + k < 7)
            G = sum(spec.Kpi_w[i - 1, l] * u0[l, j] for l in range(5))
            expected[i, j] = u0[i - 1, j] + dt * (conv - u0[i - 1, j] + G * (1 - u0[i - 1, j]))
    gw = spec.gamma_w
    expected[0] = sum(gw[i] * expected[i] for i in range(1, 5)) / (1 - gw[0])
    assert np.allclose(f.u, expected, atol=1e-15)
    inside = f.u[:, 1:-1]
    assert np.all((inside > 0) & (inside < 1))
    assert np.all(f.u[:, 0] > 0) and np.all(u0[:, 0] == 0)


def test_step_rejects_wrong_time_step(r1):
    with pytest.raises(ValidationError):
        cauchy.Stepper(r1, MICRO, dt=0.005)


def test_step_cfl_violation():
    spec = model.reference_model(kappa=30.0, n_a=11)
    with pytest.raises(StabilityError):
        cauchy.Stepper(spec, MICRO)


def test_range_violation_detected(r1):
    with pytest.raises(InvarianceError):
        cauchy._check_range(np.array([[1.0 + 1e-6]]), 0.0)
    with pytest.raises(ValidationError):
        cauchy.initial_field(1.5, r1, MICRO)


@settings(max_examples=10, deadline=None)
@given(arrays(np.float64, (21, 41), elements=st.floats(0.0, 1.0)), st.sampled_from(cauchy.CLOSURES))
def test_unit_interval_forward_invariant(micro_spec, u0, closure):
    traj = cauchy.run(u0, micro_spec, MICRO, 1.0, closure=closure)
    assert traj.min_value >= -1e-8 and traj.max_value <= 1.0 + 1e-8


def test_positive_after_one_age_span(r1):
    u0 = lambda a, x: (np.abs(x) <= 1.0).astype(float) + 0 * a  # noqa: E731
    traj = cauchy.run(u0, r1, SpaceGrid(10.0, 201), 1.0)
    final = traj.at(1.0)
    assert final.u[:, 100].min() > 0


def test_snapshots_ordered(r1):
    traj = cauchy.run(0.3, r1, MICRO, 0.5, sample_times=[0.5, 0.0, 0.2])
    assert np.all(np.diff(traj.times) > 0)
    with pytest.raises(ValidationError):
        cauchy.run(0.3, r1, MICRO, 0.5, sample_times=[0.123])


def test_fft_stepper_matches_direct(r1):
    rng = np.random.default_rng(3)
    u0 = rng.random((r1.age_grid.n_a, MICRO.n_x))
    a = cauchy.run(u0, r1, MICRO, 0.3).snapshots[-1].u
    b = cauchy.run(u0, r1, MICRO, 0.3, method="fft").snapshots[-1].u
    assert np.abs(a - b).max() < 1e-10


def _history(spec, T=0.5, closure="zero"):
    u0 = lambda a, x: 0.8 * np.exp(-x * x) * (1 - 0.5 * a)  # noqa: E731
    return cauchy.run(u0, spec, MICRO, T, keep_history=True, closure=closure)


def test_renewal_formula_identity_at_zero(micro_spec):
    check = cauchy.renewal_formula_check(_history(micro_spec), micro_spec, 0.0)
    assert check.defect == 0.0


def test_renewal_formula_linear_case():
    spec = model.reference_model(n_a=21).with_K(0.0)
    check = cauchy.renewal_formula_check(_history(spec), spec, 0.5)
    assert check.series_converged
    assert check.defect < 5e-3


def test_renewal_formula_defect_first_order():
    defects = []
    for n_a in (11, 21, 41):
        spec = model.reference_model(n_a=n_a)
        check = cauchy.renewal_formula_check(_history(spec), spec, 0.5)
        assert check.series_converged
        defects.append(check.defect)
    assert defects[0] < 5e-2
    for d1, d2 in zip(defects, defects[1:]):
        assert 0.4 <= d2 / d1 <= 0.6


def test_renewal_formula_needs_history(r1):
    with pytest.raises(ValidationError):
        cauchy.renewal_formula_check(cauchy.run(0.2, r1, MICRO, 0.1), r1, 0.1)


def test_steady_state_scan_reference(r1):
    scan = cauchy.steady_state_scan(r1)
    assert sorted(scan.constant_levels()) == pytest.approx([0.0, 1.0], abs=1e-7)
    assert max(scan.residuals) < 1e-9
    one = next(k for k, e in enumerate(scan.equilibria) if e.mean() > 0.5)
    assert scan.labels[0.0] != one and scan.labels[1.0] == one
    interior = [g for g in scan.guesses if 0 < g < 1]
    assert len(interior) == 9 and all(scan.labels[g] == one for g in interior)


def test_steady_state_scan_age_dependent():
    g = model.AgeGrid(1.0, 101)
    spec = model.ModelSpec.from_rates(g, lambda a: 0.3 * a, 1.0, lambda a, b: 2.0 + a - b,
                                      model.kernels.gaussian(), normalize_beta=True)
    scan = cauchy.steady_state_scan(spec)
    assert len(scan.equilibria) == 2 and max(scan.residuals) < 1e-9


def test_steady_state_scan_flags_degenerate_model(r1):
    with pytest.raises(ModelInconsistencyError):
        cauchy.steady_state_scan(r1.with_K(0.0))


def test_comparison_examples(micro_spec):
    rng = np.random.default_rng(7)
    v0 = rng.random((micro_spec.age_grid.n_a, MICRO.n_x))
    assert cauchy.comparison_check(0.0, v0, micro_spec, MICRO, 1.0)
    assert cauchy.comparison_check(0.5 * v0, v0, micro_spec, MICRO, 1.0)
    same = cauchy.comparison_check(v0, v0, micro_spec, MICRO, 1.0)
    assert same.ordered and same.worst_margin == 0.0


@settings(max_examples=15, deadline=None)
@given(arrays(np.float64, (21, 41), elements=st.floats(0.0, 1.0)),
       arrays(np.float64, (21, 41), elements=st.floats(0.0, 1.0)))
def test_comparison_property(micro_spec, a, b):
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    assert cauchy.comparison_check(lo, hi, micro_spec, MICRO, 1.0, closure="edge")


@pytest.mark.parametrize("theta", [0.05, 0.4, 0.9])
def test_space_free_agreement(r1, theta):
    traj = cauchy.run(theta, r1, MICRO, 1.0, closure="edge")
    ref = cauchy.space_free_run(r1, theta, 1.0)
    assert np.abs(traj.snapshots[-1].u - ref[:, None]).max() < 1e-6


def test_space_free_independent_integration(r1):
    # x-uniform data on the reference model: K ≡ 1, so every age row feels
    # G = ∫u; integrate the lockstep scheme with plain loops.
    theta, n = 0.2, r1.age_grid.n_a
    dt = r1.age_grid.step
    w = r1.weights
    u = [theta] * n
    for _ in range(50):
        G = sum(w[j] * u[j] for j in range(n))
        new = [0.0] + [u[i - 1] + dt * G * (1 - u[i - 1]) for i in range(1, n)]
        gw = r1.gamma_w
        new[0] = sum(gw[i] * new[i] for i in range(1, n)) / (1 - gw[0])
        u = new
    assert np.abs(cauchy.space_free_run(r1, theta, 0.5) - np.array(u)).max() < 1e-13
    assert math.isfinite(sum(u))
