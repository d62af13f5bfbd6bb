import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdifflab import spectral as sp
from sdifflab.fluid import (
    Direction,
    FluidState,
    Scheme,
    SolverConfig,
    SolverError,
    energy_law_residual,
    initial_state,
    integrate,
    ns_rhs,
    pressure_from_velocity,
    sg_burgers_residual,
    step,
    taylor_green,
    time_reversal_check,
)

seeds = st.integers(0, 2**32 - 1)
fast = settings(max_examples=10, deadline=None)


def random_u(seed, K=4, band=2, level=1.0):
    return sp.retruncate(sp.random_div_free(np.random.default_rng(seed), 2, band, 1.0, level), K)


class TestRightHandSide:
    def test_zero(self):
        s = initial_state(sp.VectorField.zeros(2, 3))
        for direction in Direction:
            assert ns_rhs(s, SolverConfig(nu=0.3, direction=direction)).max_abs_coeff() == 0.0

    @pytest.mark.parametrize("direction,factor", [("forward", -2.0), ("backward", 2.0), ("euler", 0.0)])
    def test_taylor_green(self, direction, factor):
        # advection of the vortex is a pure gradient, so only viscosity survives
        nu = 0.1
        u = sp.taylor_green_field(3)
        rhs = ns_rhs(FluidState(0.0, u), SolverConfig(nu=nu, direction=direction))
        assert (rhs - factor * nu * u).max_abs_coeff() < 1e-15

    def test_shear_flow(self):
        # u = (sin y, 0) has zero self-advection and box u = u
        u = sp.vector_field(2, 2, [((0, 1), "sin", 0, 1.0)])
        rhs = ns_rhs(FluidState(0.0, u), SolverConfig(nu=0.25))
        assert (rhs + 0.25 * u).max_abs_coeff() < 1e-15

    def test_unprojected_flux_differs(self):
        u = sp.taylor_green_field(3)
        burgers = ns_rhs(FluidState(0.0, u), SolverConfig(nu=0.0, project=False))
        assert burgers.max_abs_coeff() > 0.1

    def test_external_force(self):
        u = sp.VectorField.zeros(2, 2)
        v = sp.vector_field(2, 2, [((0, 1), "cos", 0, 1.0)])
        rhs = ns_rhs(FluidState(0.0, u, None, v), SolverConfig(nu=0.1))
        assert (rhs + v).max_abs_coeff() < 1e-15

    def test_non_solenoidal_force_is_projected(self):
        v = sp.gradient(sp.scalar_field(2, 2, [((1, 0), "cos", 1.0)]))
        with pytest.warns(UserWarning):
            s = FluidState(0.0, sp.VectorField.zeros(2, 2), None, v)
        assert s.force.max_abs_coeff() < 1e-15


class TestPressure:
    def test_taylor_green_pressure(self):
        s = taylor_green(1.5, 0.1, 0.7, K=3)
        p = pressure_from_velocity(s)
        assert (p - s.p).max_abs_coeff() < 1e-15
        x = np.array([0.3, 1.1])
        c = 1.5**2 / 4 * math.exp(-0.4 * 0.7)
        assert sp.evaluate(p, x) == pytest.approx(c * (np.cos(0.6) + np.cos(2.2)), abs=1e-14)

    def test_zero_velocity(self):
        assert pressure_from_velocity(FluidState(0.0, sp.VectorField.zeros(2, 2))).max_abs_coeff() == 0.0


class TestIntegrate:
    @pytest.mark.parametrize("scheme", ["ifrk4", "rk4"])
    def test_taylor_green_decay(self, scheme):
        nu, T = 0.1, 0.5
        cfg = SolverConfig(nu=nu, dt=0.01, K=3, scheme=scheme)
        traj = integrate(taylor_green(1.0, nu, 0.0, K=3), cfg, T)
        exact = taylor_green(1.0, nu, T, K=3)
        assert traj.final.t == pytest.approx(T)
        assert (traj.final.u - exact.u).max_abs_coeff() < 1e-9
        assert (traj.final.p - exact.p).max_abs_coeff() < 1e-9

    def test_stride_keeps_endpoints(self):
        cfg = SolverConfig(nu=0.1, dt=0.1, K=2)
        traj = integrate(taylor_green(1.0, 0.1, 0.0), cfg, 1.0, stride=3)
        assert np.allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0])

    def test_backward_runs_down(self):
        cfg = SolverConfig(nu=0.1, dt=0.1, K=2, direction="backward")
        traj = integrate(FluidState(1.0, sp.taylor_green_field(2)), cfg, 1.0)
        assert traj.times[0] == 1.0 and traj.final.t == pytest.approx(0.0)
        # terminal vortex: u(t) = e^{-2 nu (T - t)} u(T) going back in time
        assert (traj.final.u - math.exp(-0.2) * sp.taylor_green_field(2)).max_abs_coeff() < 1e-9

    def test_single_step(self):
        cfg = SolverConfig(nu=0.1, dt=0.05, K=2)
        s = step(taylor_green(1.0, 0.1, 0.0), cfg)
        assert s.t == pytest.approx(0.05)
        assert (s.u - taylor_green(1.0, 0.1, 0.05).u).max_abs_coeff() < 1e-12

    def test_rejects_fractional_duration(self):
        with pytest.raises(ValueError):
            integrate(taylor_green(1.0, 0.1, 0.0), SolverConfig(dt=0.3), 1.0)

    def test_explicit_stability_limit(self):
        cfg = SolverConfig(nu=1.0, dt=0.1, K=4, scheme="rk4")
        with pytest.raises(ValueError, match="unstable"):
            integrate(taylor_green(1.0, 1.0, 0.0, K=4), cfg, 0.1)
        # the integrating factor handles the same step
        integrate(taylor_green(1.0, 1.0, 0.0, K=4), SolverConfig(nu=1.0, dt=0.1, K=4), 0.1)

    def test_non_finite_raises(self):
        u = sp.taylor_green_field(2)
        bad = u._new(u.cos * np.nan, u.sin)
        with pytest.raises(SolverError):
            integrate(FluidState(0.0, bad), SolverConfig(dt=0.1, K=2), 0.1)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(nu=-1.0)
        with pytest.raises(ValueError):
            SolverConfig(dt=0.0)
        with pytest.raises(ValueError):
            SolverConfig(scheme="euler")
        assert SolverConfig(scheme="rk4").scheme is Scheme.RK4

    def test_zero_initial_data_stays_zero(self):
        traj = integrate(initial_state(sp.VectorField.zeros(2, 3)), SolverConfig(dt=0.1, K=3), 0.5)
        assert all(s.u.max_abs_coeff() == 0.0 for s in traj.states)


class TestInvariants:
    @fast
    @given(seeds)
    def test_forward_energy_decreases(self, seed):
        cfg = SolverConfig(nu=0.2, dt=0.02, K=4)
        E = [s.energy for s in integrate(initial_state(random_u(seed)), cfg, 0.2).states]
        assert all(b <= a + 1e-12 for a, b in zip(E, E[1:]))

    @fast
    @given(seeds)
    def test_solution_stays_divergence_free(self, seed):
        traj = integrate(initial_state(random_u(seed)), SolverConfig(nu=0.1, dt=0.02, K=4), 0.1)
        assert sp.divergence_residual(traj.final.u) < 1e-13

    def test_euler_conserves_energy_and_enstrophy(self):
        u = random_u(3, K=4, band=1)
        cfg = SolverConfig(nu=0.0, dt=0.01, K=4, direction="euler")
        traj = integrate(initial_state(u), cfg, 0.5)
        E = np.array([s.energy for s in traj.states])
        Z = np.array([s.enstrophy for s in traj.states])
        assert np.abs(E / E[0] - 1).max() < 1e-8
        assert np.abs(Z / Z[0] - 1).max() < 1e-8

    def test_energy_law_second_order(self):
        u = random_u(4, K=4, band=2)
        res = []
        for dt in (0.02, 0.01):
            traj = integrate(initial_state(u), SolverConfig(nu=0.1, dt=dt, K=4), 0.2)
            res.append(energy_law_residual(traj, 0.1).max())
        assert 1.7 < np.log2(res[0] / res[1]) < 2.3

    @fast
    @given(seeds)
    def test_sg_equivalence(self, seed):
        s = initial_state(random_u(seed, K=4))
        for direction in ("forward", "backward"):
            assert sg_burgers_residual(s, SolverConfig(nu=0.3, K=4, direction=direction)) < 1e-11

    def test_sg_without_projection_fails(self):
        s = initial_state(sp.taylor_green_field(3))
        assert sg_burgers_residual(s, SolverConfig(nu=0.3, K=3), skip_leray=True) > 0.1

    def test_time_reversal(self):
        u = random_u(5, K=4, band=2)
        assert time_reversal_check(u, SolverConfig(nu=0.1, dt=0.01, K=4), 0.2) < 1e-10


class TestOutput:
    def test_csv_and_json(self):
        traj = integrate(taylor_green(1.0, 0.1, 0.0), SolverConfig(nu=0.1, dt=0.1, K=2), 0.3)
        lines = traj.to_csv().strip().splitlines()
        assert lines[0].split(",") == ["t", "energy", "enstrophy"]
        assert len(lines) == 5
        snaps = json.loads(traj.snapshots_json())
        assert snaps[-1]["t"] == pytest.approx(0.3)
        v = sp.field_from_dict(snaps[-1]["u"])
        assert (v - traj.final.u).max_abs_coeff() == 0.0

    def test_lookup_by_time(self):
        traj = integrate(taylor_green(1.0, 0.1, 0.0), SolverConfig(nu=0.1, dt=0.1, K=2), 0.3)
        assert traj.at(0.2).t == pytest.approx(0.2)
        with pytest.raises(KeyError):
            traj.at(0.25)
