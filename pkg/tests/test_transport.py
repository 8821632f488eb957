"""Integrator tests: stationary states, conservation, convergence order,
corrector consistency, sampling contract."""

import numpy as np
import pytest

from sglab.config import RunConfig
from sglab.spectral import ScalarField, TorusGrid, NormKind, norm
from sglab.elliptic import cofactor_contract, hessian_det
from sglab.transport import (
    SimState,
    StepSizeError,
    advect_scalar,
    cfl_limit,
    field_series_interpolator,
    initial_data_field,
    run_simulation,
    step_rk4,
)
from sglab.transport import _initial_state  # test-only import


TWO_PI = 2 * np.pi


def euler_state(n=64, preset="default"):
    cfg = RunConfig(n=n, model="Euler", initial_data=preset)
    return _initial_state(cfg)


# --- initial data ----------------------------------------------------------

def test_presets_have_zero_mean():
    g = TorusGrid(64)
    for name in ("default", "steep", "shear"):
        f = initial_data_field(g, name)
        assert abs(f.mean()) < 1e-14


def test_mode_list_datum():
    g = TorusGrid(64)
    f = initial_data_field(g, [[1, 0, 1.0, 0.0], [0, 2, 0.0, 0.5]])
    expect = ScalarField.from_function(
        g, lambda x, y: np.cos(TWO_PI * x) + 0.5 * np.sin(2 * TWO_PI * y)
    )
    assert np.allclose(f.values, expect.values, atol=1e-13)


def test_mode_list_rejects_constant():
    g = TorusGrid(64)
    with pytest.raises(ValueError):
        initial_data_field(g, [[0, 0, 1.0, 0.0]])


def test_unknown_preset_rejected():
    g = TorusGrid(64)
    with pytest.raises(ValueError):
        initial_data_field(g, "nonsense")


# --- stepping basics -------------------------------------------------------

def test_zero_step_is_identity():
    s = euler_state()
    s2 = step_rk4(s, 0.0)
    assert s2 is s


def test_cfl_violation_raises():
    s = euler_state(preset="shear")
    limit = cfl_limit(s, 0.5)
    with pytest.raises(StepSizeError):
        step_rk4(s, 10 * limit, cfl=0.5)


def test_shear_is_stationary():
    # u . grad rho vanishes identically for y-only data, so 100 steps
    # leave the density bit-for-bit unchanged up to roundoff
    s0 = euler_state(preset="shear")
    s = s0
    dt = 0.9 * cfl_limit(s0, 0.5)
    for _ in range(100):
        s = step_rk4(s, dt, cfl=0.5)
    drift = norm(s.rho - s0.rho, NormKind.L2) / norm(s0.rho, NormKind.L2)
    assert drift <= 1e-10


def test_single_step_l2_conservation():
    s = euler_state(n=128)
    dt = cfl_limit(s, 0.5)
    s1 = step_rk4(s, dt, cfl=0.5)
    rel = abs(norm(s1.rho, NormKind.L2) - norm(s.rho, NormKind.L2)) / norm(
        s.rho, NormKind.L2
    )
    assert rel <= 1e-8


def test_rk4_order():
    # error against a fine-dt reference should drop ~16x per halving
    s0 = euler_state(n=64)
    T = 0.04

    def integrate(dt):
        s = s0
        steps = int(round(T / dt))
        for _ in range(steps):
            s = step_rk4(s, dt, cfl=0.9)
        return s.rho

    ref = integrate(T / 64)
    e1 = norm(integrate(T / 4) - ref, NormKind.L2)
    e2 = norm(integrate(T / 8) - ref, NormKind.L2)
    ratio = e1 / e2
    assert 11.0 < ratio < 22.0


# --- run_simulation contract ------------------------------------------------

def test_sampling_grid_and_alignment():
    cfg_e = RunConfig(n=32, model="Euler", t_final=0.3, sample_interval=0.1)
    cfg_s = RunConfig(n=32, model="SGeps", eps=0.02, t_final=0.3, sample_interval=0.1)
    te = run_simulation(cfg_e)
    ts = run_simulation(cfg_s)
    assert te.times == pytest.approx([0.0, 0.1, 0.2, 0.3], abs=0)
    assert te.times == ts.times
    assert te.exit_reason is None
    assert len(te.diagnostics) == 4
    rec = te.diagnostics[-1]
    assert rec.t == 0.3
    assert rec.velocity_gap is None
    assert rec.A_t is not None and rec.A_t > 0


def test_final_time_not_on_lattice():
    cfg = RunConfig(n=32, model="Euler", t_final=0.25, sample_interval=0.1)
    t = run_simulation(cfg)
    assert t.times == pytest.approx([0.0, 0.1, 0.2, 0.25], abs=0)


def test_l2_conserved_default_run():
    cfg = RunConfig(n=128, model="Euler", t_final=1.0)
    t = run_simulation(cfg)
    l2 = [d.l2_rho for d in t.diagnostics]
    rel = abs(l2[-1] - l2[0]) / l2[0]
    assert rel <= 1e-6


def test_immediate_bootstrap_exit():
    # steep preset with eps = 0.3 starts outside the gradient margin
    cfg = RunConfig(
        n=32, model="SGeps", eps=0.3, t_final=0.5, initial_data="steep",
        stop_on_exit=True,
    )
    t = run_simulation(cfg)
    assert t.exit_reason == "bootstrap_exit"
    assert t.exit_time == 0.0
    assert len(t.states) == 1


def test_corrector_state_shape():
    cfg = RunConfig(n=32, model="Corrector", t_final=0.2, sample_interval=0.1)
    t = run_simulation(cfg)
    assert t.exit_reason is None
    final = t.final_state
    assert final.model == "Corrector"
    assert final.background is not None
    assert final.background.time == final.time
    # rho1 starts at zero and is excited by the background determinant
    assert norm(t.states[0].rho, NormKind.L2) == 0.0
    assert norm(final.rho, NormKind.L2) > 1e-4


def test_corrector_elliptic_identity():
    # with rho_t = rhobar + eps rho1 and psi_t = phibar + eps phi1:
    #   lap psi_t - rho_t + eps det D^2 psi_t
    #     = eps^2 (cof D^2 phibar):D^2 phi1 + eps^3 det D^2 phi1
    # exactly, for every eps (quadratic algebra, no analysis involved)
    from sglab.spectral import derivative

    cfg = RunConfig(n=64, model="Corrector", t_final=0.2, sample_interval=0.1)
    t = run_simulation(cfg)
    final = t.final_state
    phibar, phi1 = final.background.potential, final.potential
    rhobar, rho1 = final.background.rho, final.rho
    for eps in (0.1, 0.02):
        psi_t = phibar + eps * phi1
        rho_t = rhobar + eps * rho1
        lap = derivative(psi_t, (2, 0)) + derivative(psi_t, (0, 2))
        lhs = lap - rho_t + eps * hessian_det(psi_t)
        rhs_f = (eps ** 2) * cofactor_contract(phibar, phi1) + (
            eps ** 3
        ) * hessian_det(phi1)
        scale = max(norm(lhs, NormKind.L2), 1e-30)
        assert norm(lhs - rhs_f, NormKind.L2) <= 1e-10 * max(scale, 1.0)


def test_corrector_transport_defect_scales_quadratically():
    # the corrected pair transports rho_t with defect exactly
    # eps^2 * u1 . grad rho1; verify the eps^2 scaling of its L2 norm
    from sglab.transport import _advection

    cfg = RunConfig(n=64, model="Corrector", t_final=0.2, sample_interval=0.1)
    t = run_simulation(cfg)
    final = t.final_state
    defect = _advection(final.potential, final.rho)  # u1 . grad rho1
    base = norm(defect, NormKind.L2)
    for eps in (0.1, 0.01):
        assert eps ** 2 * base == pytest.approx(
            norm((eps ** 2) * defect, NormKind.L2), rel=1e-12
        )
    assert base > 0


# --- passive scalar helper -------------------------------------------------

def test_advect_scalar_constant_forcing_zero_velocity():
    g = TorusGrid(32)
    zero_pot = ScalarField.zeros(g)
    f = ScalarField.from_function(g, lambda x, y: np.sin(TWO_PI * y))
    sigma0 = ScalarField.from_function(g, lambda x, y: np.cos(TWO_PI * x))
    T = 0.7
    out = advect_scalar(
        sigma0, lambda t: zero_pot, 0.0, T, dt=0.1, forcing_at=lambda t: f
    )
    expect = sigma0 + T * f
    assert norm(out - expect, NormKind.L2) <= 1e-13


def test_field_series_interpolator_cubic_exact():
    g = TorusGrid(32)
    base = ScalarField.from_function(g, lambda x, y: np.cos(TWO_PI * x))
    times = [0.0, 0.1, 0.2, 0.3, 0.4]

    def coef(t):
        return 1.0 - 2 * t + 3 * t ** 2 - 4 * t ** 3

    fields = [coef(t) * base for t in times]
    interp = field_series_interpolator(times, fields)
    for t in (0.05, 0.17, 0.33):
        got = interp(t)
        assert np.allclose(got.values, coef(t) * base.values, atol=1e-12)
    with pytest.raises(ValueError):
        interp(0.5)
