import numpy as np
import pytest

import dghlab as dg
from dghlab.evolution import (
    TRIGGER_DT,
    TRIGGER_HORIZON,
    TRIGGER_SLOPE,
    _Spectral,
    _rk4,
)


def zeros(grid):
    return dg.ic_preset("from_samples", grid, values=np.zeros(grid.n_points))


def constant(grid, c):
    return dg.ic_preset("from_samples", grid, values=np.full(grid.n_points, c))


class TestSolverConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(t_max=0.0),
            dict(t_max=1.0, cfl=0.0),
            dict(t_max=1.0, cfl=1.5),
            dict(t_max=1.0, dt_min=0.0),
            dict(t_max=1.0, slope_blowup_threshold=-1.0),
            dict(t_max=1.0, record_every=0),
        ],
    )
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            dg.SolverConfig(**kw)


class TestRhsOneComponent:
    def test_zero_datum(self, grid1024, params_ch):
        op = dg.make_operator(grid1024, params_ch)
        out = dg.dgh_rhs(zeros(grid1024), op, params_ch)
        assert np.max(np.abs(out.values)) == 0.0

    def test_constant_datum_dispersionless(self, grid1024, params_ch):
        # k = lam = 0: transport of a constant vanishes and the nonlocal
        # term of a constant has zero derivative
        op = dg.make_operator(grid1024, params_ch)
        out = dg.dgh_rhs(constant(grid1024, 0.8), op, params_ch)
        assert np.max(np.abs(out.values)) < 1e-14

    def test_matches_momentum_form(self, grid4096):
        # independent derivation: m = u - a^2 u_xx evolves by
        # m_t = -c0 u_x - u m_x - 2 m u_x - gamma u_xxx, and u_t = Q m_t
        p = dg.make_parameters(1.3, 0.4, 0.25)
        grid = grid4096
        op = dg.make_operator(grid, p)
        u = dg.ic_preset("gaussian_bump", grid, a=0.7)
        rhs = dg.dgh_rhs(u, op, p).values

        n = grid.n_points
        uh = np.fft.rfft(u.values)
        xi = grid.wavenumbers()
        ik = 1j * xi
        ik[-1] = 0.0
        ux = np.fft.irfft(ik * uh, n=n)
        uxx = np.fft.irfft(-(xi**2) * uh, n=n)
        uxxx = np.fft.irfft(ik * -(xi**2) * uh, n=n)
        m = u.values - p.alpha**2 * uxx
        mx = ux - p.alpha**2 * uxxx
        mt = -p.c0 * ux - u.values * mx - 2.0 * m * ux - p.gamma * uxxx
        oracle = op.apply_q_values(mt)
        assert np.max(np.abs(rhs - oracle)) < 1e-8


class TestRhsTwoComponent:
    def test_zero_data(self, grid1024, params_ch):
        op = dg.make_operator(grid1024, params_ch)
        st = dg.State(0.0, zeros(grid1024), zeros(grid1024))
        du, dr = dg.dgh2_rhs(st, op, params_ch)
        assert np.max(np.abs(du.values)) == 0.0
        assert np.max(np.abs(dr.values)) == 0.0

    def test_resting_velocity(self, grid1024, params_ch):
        # u = 0: the density only forces u through the convolution term
        op = dg.make_operator(grid1024, params_ch)
        rho = dg.ic_preset("gaussian_bump", grid1024, a=0.3)
        st = dg.State(0.0, zeros(grid1024), rho)
        du, dr = dg.dgh2_rhs(st, op, params_ch)
        n = grid1024.n_points
        mask = (np.arange(n // 2 + 1) <= n // 3).astype(float)
        rf = np.fft.irfft(mask * np.fft.rfft(rho.values), n=n)
        expected = -op.apply_dq_values(
            np.fft.irfft(mask * np.fft.rfft(0.5 * rf * rf), n=n) + rho.values
        )
        assert np.max(np.abs(du.values - expected)) < 1e-13
        assert np.max(np.abs(dr.values)) == 0.0

    def test_rho_at_minus_one_is_stationary(self, grid1024, params_ch):
        # rho~ = -1: the source -u_x rho~ - u_x cancels identically
        op = dg.make_operator(grid1024, params_ch)
        u = dg.ic_preset("gaussian_bump", grid1024, a=0.6)
        st = dg.State(0.0, u, constant(grid1024, -1.0))
        _, dr = dg.dgh2_rhs(st, op, params_ch)
        assert np.max(np.abs(dr.values)) < 1e-13

    def test_requires_density(self, grid1024, params_ch):
        op = dg.make_operator(grid1024, params_ch)
        with pytest.raises(ValueError):
            dg.dgh2_rhs(dg.State(0.0, zeros(grid1024)), op, params_ch)

    def test_sigma_scales_density_coupling(self, grid1024):
        # sigma = 0 decouples the density from the velocity equation
        p0 = dg.make_parameters(1.0, 0.0, 0.0, sigma=0.0)
        op = dg.make_operator(grid1024, p0)
        u = dg.ic_preset("gaussian_bump", grid1024, a=0.5)
        rho = dg.ic_preset("gaussian_bump", grid1024, a=0.4, center=1.0)
        du2, _ = dg.dgh2_rhs(dg.State(0.0, u, rho), op, p0)
        du1 = dg.dgh_rhs(u, op, p0)
        assert np.max(np.abs(du2.values - du1.values)) < 1e-15


class TestStepRK4:
    def test_zero_fixed_point(self, grid1024, params_ch):
        op = dg.make_operator(grid1024, params_ch)
        st = dg.State(0.0, zeros(grid1024))
        out = dg.step_rk4(st, 0.05, op, params_ch)
        assert out.t == 0.05
        assert np.max(np.abs(out.u.values)) == 0.0

    def test_rejects_nonpositive_dt(self, grid1024, params_ch):
        op = dg.make_operator(grid1024, params_ch)
        with pytest.raises(ValueError):
            dg.step_rk4(dg.State(0.0, zeros(grid1024)), 0.0, op, params_ch)

    def test_fourth_order_self_convergence(self, grid1024, params_ch):
        # halving dt must shrink the final-state error ~16x (Richardson
        # against a dt/4 reference)
        op = dg.make_operator(grid1024, params_ch)
        sp = _Spectral(grid1024, params_ch, op)
        u0 = dg.ic_preset("gaussian_bump", grid1024).values

        def integrate(dt, T=0.4):
            u = u0.copy()
            for _ in range(round(T / dt)):
                u, _ = _rk4(u, None, dt, sp, params_ch)
            return u

        ref = integrate(0.005)
        e1 = np.max(np.abs(integrate(0.02) - ref))
        e2 = np.max(np.abs(integrate(0.01) - ref))
        order = np.log2(e1 / e2)
        assert 3.6 < order < 4.5

    def test_linearized_phase_speed(self, grid1024):
        # amplitude-1e-8 single mode travels at the linear phase speed
        # c(xi) = (c0 - gamma xi^2)/(1 + alpha^2 xi^2)
        p = dg.make_parameters(1.0, 0.0, 1.0)
        op = dg.make_operator(grid1024, p)
        m = 5
        xi0 = np.pi * m / grid1024.half_length
        u0 = dg.ic_preset(
            "from_samples", grid1024, values=1e-8 * np.cos(xi0 * grid1024.nodes)
        )
        cfg = dg.SolverConfig(t_max=0.5, record_every=10**6)
        traj, _ = dg.simulate(dg.State(0.0, u0), cfg, op, p)
        T = traj.final_state.t
        ph0 = np.angle(np.fft.rfft(u0.values)[m])
        ph1 = np.angle(np.fft.rfft(traj.final_state.u.values)[m])
        c_meas = -np.angle(np.exp(1j * (ph1 - ph0))) / (xi0 * T)
        c_theory = (p.c0 - p.gamma * xi0**2) / (1 + p.alpha**2 * xi0**2)
        assert abs(c_meas - c_theory) / abs(c_theory) < 1e-3


class TestAdaptiveDt:
    def test_zero_field_hits_horizon_cap(self, grid1024, params_ch):
        cfg = dg.SolverConfig(t_max=2.5)
        dt = dg.adaptive_dt(dg.State(0.0, zeros(grid1024)), cfg, params_ch)
        assert dt == 2.5

    def test_doubling_speed_halves_dt(self, grid1024, params_ch):
        cfg = dg.SolverConfig(t_max=1e9)
        dt1 = dg.adaptive_dt(dg.State(0.0, constant(grid1024, 0.5)), cfg, params_ch)
        dt2 = dg.adaptive_dt(dg.State(0.0, constant(grid1024, 1.0)), cfg, params_ch)
        assert dt1 == pytest.approx(2.0 * dt2, rel=1e-15)

    def test_lam_contributes_to_speed(self, grid1024):
        p = dg.make_parameters(1.0, -2.0, 2.0)  # lam = 2
        cfg = dg.SolverConfig(t_max=1e9)
        dt = dg.adaptive_dt(dg.State(0.0, zeros(grid1024)), cfg, p)
        assert dt == pytest.approx(cfg.cfl * grid1024.dx / 2.0, rel=1e-15)


class TestSimulate:
    def test_zero_datum_reaches_horizon(self, grid1024, params_ch):
        op = dg.make_operator(grid1024, params_ch)
        cfg = dg.SolverConfig(t_max=1.0)
        traj, rep = dg.simulate(dg.State(0.0, zeros(grid1024)), cfg, op, params_ch)
        assert rep.trigger == TRIGGER_HORIZON
        assert not rep.blew_up
        assert rep.t_detect is None
        assert traj.final_state.t == pytest.approx(1.0, abs=1e-12)
        for r in traj.records:
            assert np.max(np.abs(r.state.u.values)) == 0.0

    def test_rejects_nonfinite_initial(self, grid1024, params_ch):
        op = dg.make_operator(grid1024, params_ch)
        vals = np.zeros(1024)
        vals[0] = np.inf
        bad = dg.Field(grid1024, vals, allow_nonfinite=True)
        with pytest.raises(ValueError):
            dg.simulate(dg.State(0.0, bad), dg.SolverConfig(t_max=1.0), op, params_ch)

    def test_breaking_run_detects(self, breaking_run):
        traj, rep, verdict, params = breaking_run
        assert rep.blew_up
        assert rep.trigger == TRIGGER_SLOPE
        assert rep.t_detect < 2.0
        assert rep.min_slope_at_detect < -1e4
        times = traj.times()
        assert times[0] == 0.0
        assert np.all(np.diff(times) > 0)
        assert traj.records[-1].at_detection
        assert len(traj.pre_detection_records()) == len(traj.records) - 1

    def test_small_datum_stays_smooth(self, runs):
        traj, rep, _, _ = runs.get("negative_control")
        assert rep.trigger == TRIGGER_HORIZON
        assert min(r.diagnostics.min_ux for r in traj.records) >= -0.1

    def test_amplitude_overflow_reports_dt_underflow(self, params_ch):
        grid = dg.make_grid(20.0, 64)
        op = dg.make_operator(grid, params_ch)
        u0 = dg.ic_preset("gaussian_bump", grid, a=1e155)
        cfg = dg.SolverConfig(t_max=1.0)
        traj, rep = dg.simulate(dg.State(0.0, u0), cfg, op, params_ch)
        assert rep.trigger == TRIGGER_DT
        assert rep.blew_up
        # last finite state retained
        assert np.all(np.isfinite(traj.final_state.u.values))
        assert traj.records[-1].at_detection

    def test_nan_backoff_reports_dt_underflow(self, params_ch):
        # dt_min low enough that the CFL guard passes, but the quadratic
        # terms overflow inside the stages at any step size
        grid = dg.make_grid(20.0, 64)
        op = dg.make_operator(grid, params_ch)
        u0 = dg.ic_preset("gaussian_bump", grid, a=1e155)
        cfg = dg.SolverConfig(t_max=1.0, dt_min=1e-300)
        traj, rep = dg.simulate(dg.State(0.0, u0), cfg, op, params_ch)
        assert rep.trigger == TRIGGER_DT
        assert np.all(np.isfinite(traj.final_state.u.values))


class TestConservation:
    def test_energy_drift_pre_breaking(self, runs):
        # N = 2048 smooth bump run over t <= 1 with min u_x >= -10
        traj, rep, _, params = runs.get("bump", 2048)
        assert rep.trigger == TRIGGER_HORIZON
        assert min(r.diagnostics.min_ux for r in traj.records) >= -10.0
        E = [r.diagnostics.energy_e for r in traj.records]
        assert (max(E) - min(E)) / abs(E[0]) < 1e-6

    def test_cubic_functional_drift_pre_breaking(self, runs):
        traj, _, _, _ = runs.get("bump", 2048)
        F = [r.diagnostics.energy_f for r in traj.records]
        scale = max(abs(F[0]), 1e-30)
        assert (max(F) - min(F)) / scale < 1e-5

    def test_two_component_energy_drift(self, runs):
        traj, rep, _, _ = runs.get("two_smooth")
        assert rep.trigger == TRIGGER_HORIZON
        E = [r.diagnostics.energy_e for r in traj.records]
        assert (max(E) - min(E)) / abs(E[0]) < 1e-6

    def test_sup_norm_bound(self, runs, params_ch):
        # max|u(t)| <= ||u0||_{H1,alpha}/sqrt(2 alpha) + 1e-6 before
        # detection (energy conservation + the sharp embedding)
        for key in (("bump", 4096), ("breaking", 1.0, 4096)):
            traj, _, _, params = runs.get(*key)
            u0 = traj.records[0].state.u
            bound = dg.h_alpha_norm(u0, params) / np.sqrt(2 * params.alpha)
            for r in traj.pre_detection_records():
                assert r.diagnostics.max_abs_u <= bound + 1e-6


class TestTrajectoryRecords:
    def test_first_record_is_initial_datum(self, bump_run):
        traj, _, _, _ = bump_run
        r0 = traj.records[0]
        assert r0.state.t == 0.0
        assert r0.diagnostics.dt == 0.0
        expected = np.exp(-(traj.grid.nodes**2) / 2)
        assert np.array_equal(r0.state.u.values, expected)

    def test_records_carry_time_derivatives(self, bump_run):
        # each record stores the instantaneous RHS for dense-in-time
        # reconstruction by the characteristics module
        traj, _, _, params = bump_run
        r = traj.records[3]
        op = dg.make_operator(traj.grid, params)
        du = dg.dgh_rhs(r.state.u, op, params)
        assert np.max(np.abs(du.values - r.du_dt.values)) < 1e-14

    def test_grid_min_slope_saturates_while_tracker_collapses(self, breaking_run):
        # the recorded grid minimum of u_x cannot follow the cusp: it
        # bottoms out at O(sqrt(N)) scale while the characteristic-tracked
        # slope crosses the 1e4 threshold
        traj, rep, _, _ = breaking_run
        grid_min = min(r.diagnostics.min_ux for r in traj.records)
        assert grid_min > -100.0
        assert rep.min_slope_at_detect < -1e4
