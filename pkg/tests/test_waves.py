import math

import numpy as np
import pytest

from agewave import cauchy, model, spectral, waves
from agewave.errors import DomainError, StabilityError
from agewave.model import SpaceGrid

from conftest import C2_LAMBDA1

FRAME = waves.DEFAULT_FRAME


def test_p_of_eta(r1, r1_report):
    l1, _ = r1_report.roots(2.0)
    assert waves.p_of_eta(r1.J, 0.0, l1, 2.0) == 0.0
    assert waves.p_of_eta(r1.J, 0.01, l1, 2.0) > 0
    # far past the minimum of Λ(·, c) the sign flips
    assert waves.p_of_eta(r1.J, 4.0, l1, 2.0) < 0


def test_sub_parameters_reference(r1, r1_report):
    pair = waves.select_sub_parameters(r1, r1_report, 2.0)
    assert pair.alpha == pytest.approx(1.0)
    assert pair.xi_M == pytest.approx(0.0, abs=1e-12)
    assert pair.lam == pytest.approx(C2_LAMBDA1, abs=1e-12)
    assert 0 < pair.eta < pair.lam and pair.p_eta > 0


def test_continuous_pair_margins(r1, r1_report):
    pair = waves.select_sub_parameters(r1, r1_report, 2.0, verify=False)
    report = waves.verify_ordered_pair(pair, r1)
    assert report.passed, report.to_dict()
    assert min(report.margins.values()) >= -1e-9


def test_pair_saturates_behind_front(r1, r1_report):
    pair = waves.select_sub_parameters(r1, r1_report, 2.0)
    a = r1.nodes[:, None]
    assert np.all(pair.super(a, np.full((1, 5), -20.0)) == 1.0)
    assert np.all(pair.sub(a, np.linspace(-30, 30, 61)[None, :]) <= pair.super(a, np.linspace(-30, 30, 61)[None, :]))


def test_forced_subcritical_pair_fails(r1, r1_report):
    with pytest.raises(DomainError):
        waves.select_sub_parameters(r1, r1_report, 1.2)
    pair = waves.select_sub_parameters(r1, r1_report, 1.2, force=True)
    report = waves.verify_ordered_pair(pair, r1)
    assert report.super_margin < -1e-3


def test_grid_roots_approach_continuous_roots(r1_report):
    gaps = []
    for n_a in (101, 201, 401):
        spec = model.reference_model(n_a=n_a)
        l1, l2, lam_min, psi = waves.grid_decay_roots(spec, 2.0, 0.01)
        assert l1 < lam_min < l2 and psi.min() > 0
        gaps.append(abs(l1 - C2_LAMBDA1))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[1] / gaps[0] == pytest.approx(0.5, abs=0.1)


def test_grid_pair_is_ordered_on_the_map(r1, r1_report, wave_c2):
    pair, _ = wave_c2
    assert pair.grid and pair.lam_reference == pytest.approx(C2_LAMBDA1)
    assert waves.check_pair_on_map(pair, r1, FRAME).passed


def test_wave_at_two(wave_c2):
    _, prof = wave_c2
    assert prof.iterations < 500
    assert prof.residual < 1e-6
    assert prof.monotonicity_violation() <= 1e-10
    left, right = prof.edge_defects()
    assert left < 1e-3 and right < 1e-3
    assert 0.0 <= prof.w.min() and prof.w.max() <= 1.0


def test_iterates_sandwiched_and_nonincreasing(wave_c2):
    _, prof = wave_c2
    assert min(prof.sandwich_lower) >= -1e-10
    assert max(prof.sandwich_upper) <= 1e-10
    assert max(prof.order_violation) <= 1e-10


def test_residual_of_constant_states(r1):
    xi = FRAME.nodes
    for value in (0.0, 1.0):
        prof = waves.WaveProfile(c=2.0, a=r1.nodes, xi=xi, w=np.full((r1.age_grid.n_a, xi.size), value))
        assert waves.wave_residual(prof, r1) == pytest.approx(0.0, abs=1e-14)


def test_edge_states_are_equilibria(r1, wave_c2):
    _, prof = wave_c2
    scan = cauchy.steady_state_scan(r1)
    levels = sorted(scan.constant_levels())
    assert levels == pytest.approx([0.0, 1.0], abs=1e-7)
    assert np.abs(prof.w[:, 0] - levels[1]).max() < 1e-3
    assert np.abs(prof.w[:, -1] - levels[0]).max() < 1e-3


def test_lipschitz_modulus(wave_c2):
    _, prof = wave_c2
    result = waves.lipschitz_modulus_check(prof)
    assert math.isfinite(result.m_fit) and result.m_fit >= C2_LAMBDA1
    h = prof.h
    w = prof.w
    for s in range(1, 6):
        assert np.abs(w[:, s:] - w[:, :-s]).max() <= math.expm1(result.m_fit * s * h) + 1e-15


def test_lipschitz_constant_profile(r1):
    xi = FRAME.nodes
    prof = waves.WaveProfile(c=2.0, a=r1.nodes, xi=xi, w=np.ones((r1.age_grid.n_a, xi.size)))
    assert waves.lipschitz_modulus_check(prof, candidates=[0.5, 1.0, 2.0]).m_fit == 0.5


@pytest.mark.parametrize("nodes", [5, 0.5])
def test_translation_covariance(r1, wave_c2, nodes):
    pair, prof = wave_c2
    shift = nodes * FRAME.step
    moved = waves.monotone_iterate(r1, 2.0, pair.translate(shift), FRAME, xi0=FRAME.nodes[0] + shift)
    assert np.abs(moved.w - prof.w).max() < 1e-8


@pytest.mark.slow
def test_minimal_and_maximal_branches_agree(r1, wave_c2):
    pair, prof = wave_c2
    low = waves.monotone_iterate(r1, 2.0, pair, FRAME, branch="minimal", max_iter=5000)
    assert max(low.order_violation) <= 1e-10
    gap = float(np.abs(low.w - prof.w).max())
    # both stop at increment 1e-8; the gap is reported, not assumed zero
    assert gap < 1e-5


def test_age_step_stability_guard():
    spec = model.reference_model(kappa=40.0, n_a=11)
    rep = spectral.dispersion_report(spec)
    pair = waves.select_sub_parameters(spec, rep, rep.c_star + 1.0, verify=False)
    with pytest.raises(StabilityError):
        waves.monotone_iterate(spec, rep.c_star + 1.0, pair, SpaceGrid(10.0, 201))


def test_half_level_normalization(wave_c2):
    _, prof = wave_c2
    norm = waves.normalized(prof)
    assert float(np.interp(0.0, norm.xi, norm.w[0])) == pytest.approx(0.5, abs=1e-6)


@pytest.mark.slow
def test_critical_wave_sequence(r1, r1_report):
    prof = waves.critical_wave(r1, r1_report, FRAME)
    d = prof.diagnostics
    assert d["speeds"][-1] == pytest.approx(r1_report.c_star + 0.025)
    assert all(abs(v - 0.5) < 1e-6 for v in d["half_values"])
    diffs = d["cauchy_differences"]
    assert all(b < a for a, b in zip(diffs, diffs[1:]))
    for p in d["profiles"]:
        left, right = p.edge_defects()
        assert left < 1e-3 and right < 1e-3
        assert p.monotonicity_violation() <= 1e-10
