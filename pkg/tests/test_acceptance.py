"""End-to-end acceptance criteria. Each test prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from agewave import cauchy, kernels, model, spectral, spreading, waves
from agewave.model import SpaceGrid

from conftest import rank_one_rho

SEED = 20240611


@pytest.fixture
def report_line(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number:2d}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
        assert ok, detail

    return emit


def test_01_dispersion_closed_forms(report_line):
    t0 = time.perf_counter()
    spec = model.reference_model()
    rep = spectral.dispersion_report(spec)
    elapsed = time.perf_counter() - t0
    lam = rep.lambda_of(rep.c_star)
    ok = (abs(rep.s0 + 1.0) < 1e-8 and abs(rep.c_star - math.exp(0.5)) < 1e-5
          and abs(lam - 1.0) < 1e-6 and elapsed < 1.0)
    report_line(1, "dispersion closed forms", ok,
                f"s0={rep.s0:.12f} c*={rep.c_star:.10f} λ(c*)={lam:.10f} t={elapsed:.3f}s")


def test_02_c0_equals_c_star(report_line):
    t0 = time.perf_counter()
    details, ok = [], True
    for name, J in (("gaussian", kernels.gaussian(1.0)), ("laplace b=0.3", kernels.laplace(0.3))):
        spec = model.ModelSpec.from_rates(model.AgeGrid(1.0, 101), 0.0, 1.0, 1.0, J)
        rep = spectral.dispersion_report(spec)
        ref = spreading.kpp_reference(spec, rep)
        rel = abs(ref.c0 - rep.c_star) / rep.c_star
        ok &= rel < 1e-6
        details.append(f"{name}: c0={ref.c0:.10f} c*={rep.c_star:.10f} rel={rel:.1e}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 2.0
    report_line(2, "c0 = c*", ok, "; ".join(details) + f"; t={elapsed:.2f}s")


def test_03_spectral_monotonicity(report_line):
    spec = model.reference_model()
    shifts = [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5]
    rhos = [spectral.rho_of_s(spec, s) for s in shifts]
    gaps = np.diff(rhos)
    err = max(abs(r - rank_one_rho(s)) for s, r in zip(shifts, rhos))
    ok = bool(np.all(gaps > 0)) and err < 1e-8
    report_line(3, "spectral monotonicity", ok, f"min gap={gaps.min():.4f} closed-form error={err:.1e}")


@pytest.fixture(scope="module")
def timed_wave():
    spec = model.reference_model(n_a=101)
    rep = spectral.dispersion_report(spec)
    frame = SpaceGrid(30.0, 1201)
    t0 = time.perf_counter()
    pair = waves.grid_consistent_pair(spec, rep, 2.0, frame)
    prof = waves.monotone_iterate(spec, 2.0, pair, frame, tol=1e-8)
    return spec, rep, pair, prof, time.perf_counter() - t0


def test_04_wave_profile(report_line, timed_wave):
    _, _, _, prof, elapsed = timed_wave
    left, right = prof.edge_defects()
    mono = prof.monotonicity_violation()
    ok = (prof.iterations < 500 and prof.residual < 1e-6 and mono <= 1e-10
          and left < 1e-3 and right < 1e-3 and elapsed < 60)
    report_line(4, "wave profile c=2", ok,
                f"iterations={prof.iterations} residual={prof.residual:.1e} monotonicity={mono:.1e} "
                f"edges=({left:.1e}, {right:.1e}) t={elapsed:.1f}s")


@pytest.mark.slow
def test_05_sandwich(report_line, timed_wave):
    spec, rep, _, prof2, _ = timed_wave
    frame = SpaceGrid(30.0, 1201)
    details, ok = [], True
    for c in (rep.c_star + 0.1, 2.0, 3.0):
        if c == 2.0:
            prof = prof2
        else:
            pair = waves.grid_consistent_pair(spec, rep, c, frame)
            prof = waves.monotone_iterate(spec, c, pair, frame, tol=1e-8, max_iter=5000)
        low, up, order = min(prof.sandwich_lower), max(prof.sandwich_upper), max(prof.order_violation)
        ok &= low >= -1e-12 and up <= 1e-12 and order <= 1e-12
        details.append(f"c={c:.4f}: min(u-U̲)={low:.1e} max(u-Ū)={up:.1e} max increase={order:.1e}")
    report_line(5, "sandwich", ok, "; ".join(details))


def test_06_lipschitz(report_line, timed_wave):
    _, rep, _, prof, _ = timed_wave
    lam1 = rep.roots(2.0)[0]
    res = waves.lipschitz_modulus_check(prof, lam1=lam1, max_shift=5)
    w, h = prof.w, prof.h
    holds = all(np.abs(w[:, s:] - w[:, :-s]).max() <= math.expm1(res.m_fit * s * h) for s in range(1, 6))
    ok = math.isfinite(res.m_fit) and res.m_fit >= lam1 and holds
    report_line(6, "Lipschitz bound", ok, f"m={res.m_fit:.2f} λ1={lam1:.4f} smallest admissible={res.m_min:.4f}")


def test_07_steady_state_dichotomy(report_line):
    scan = cauchy.steady_state_scan(model.reference_model(), n_guesses=9)
    levels = sorted(scan.constant_levels())
    ok = (len(scan.equilibria) == 2 and abs(levels[0]) < 1e-7 and abs(levels[1] - 1) < 1e-7
          and max(scan.residuals) < 1e-9)
    report_line(7, "steady-state dichotomy", ok, f"levels={levels} max residual={max(scan.residuals):.1e}")


def test_08_comparison_principle(report_line):
    spec = model.reference_model()
    grid = SpaceGrid(5.0, 51)
    rng = np.random.default_rng(SEED)
    worst = math.inf
    for _ in range(50):
        v0 = rng.random((spec.age_grid.n_a, grid.n_x))
        u0 = v0 * rng.random(v0.shape)
        worst = min(worst, cauchy.comparison_check(u0, v0, spec, grid, 2.0).worst_margin)
    report_line(8, "comparison principle", worst >= -1e-10, f"50 pairs, worst margin={worst:.2e}, seed={SEED}")


@pytest.mark.slow
def test_09_spreading_speed(report_line):
    t0 = time.perf_counter()
    spec = model.reference_model(n_a=201)
    rep = spectral.dispersion_report(spec)
    grid = SpaceGrid.from_spacing(80.0, 0.1)
    T = 35.0
    res = spreading.spreading_run(spec, grid, T, record_every=5)
    ratio = res.estimate.c_right / rep.c_star
    outer = spreading.outer_bound_check(res.trajectory, spec, rep, rep.c_star + 0.3)
    final = res.trajectory.at(T)
    inside = np.abs(grid.nodes) <= 0.5 * rep.c_star * T
    interior = float(final.u[:, inside].min())
    elapsed = time.perf_counter() - t0
    ok = 0.95 <= ratio <= 1.05 and outer.worst_margin >= -1e-8 and interior > 0.9 and elapsed < 600
    report_line(9, "spreading speed", ok,
                f"ĉ={res.estimate.c_right:.4f} ratio={ratio:.4f} outer margin={outer.worst_margin:.1e} "
                f"interior min={interior:.6f} t={elapsed:.0f}s")


def test_10_hair_trigger(report_line):
    spec = model.reference_model()
    grid = SpaceGrid.from_spacing(30.0, 0.1)
    r0 = spreading.hair_trigger_check(spec, grid, 0.1, 0.9, x0=0.0)
    r3 = spreading.hair_trigger_check(spec, grid, 0.1, 0.9, x0=3.0)
    dt = spec.age_grid.step
    ok = abs(r0.T - r3.T) <= dt + 1e-12 and min(r0.worst_margin, r3.worst_margin) >= -1e-12
    report_line(10, "hair trigger", ok,
                f"T(x0=0)={r0.T:.4f} T(x0=3)={r3.T:.4f} dt={dt} worst margin={min(r0.worst_margin, r3.worst_margin):.1e}")


def test_11_convergence_order(report_line):
    grid = SpaceGrid(4.0, 41)
    u0 = lambda a, x: 0.8 * np.exp(-x * x) * (1 - 0.5 * a)  # noqa: E731
    defects = []
    for n_a in (11, 21, 41):
        spec = model.reference_model(n_a=n_a)
        traj = cauchy.run(u0, spec, grid, 0.5, keep_history=True)
        defects.append(cauchy.renewal_formula_check(traj, spec, 0.5).defect)
    ratios = [b / a for a, b in zip(defects, defects[1:])]
    ok = all(0.4 <= r <= 0.6 for r in ratios)
    report_line(11, "first-order convergence", ok,
                f"defects={[f'{d:.2e}' for d in defects]} ratios={[f'{r:.3f}' for r in ratios]}")
