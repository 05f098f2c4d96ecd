import math

import numpy as np
import pytest

from uniflux.core import ForceField, SimParams
from uniflux.flux import (
    DensityProbe,
    analytic_uf_brownian,
    analytic_uf_langevin,
    count_crossings,
    matching_identity_check,
    mc_one_step_histogram,
    periodic_equilibrium_flux,
    propagate_phase_space_grid,
    propagator_step_check,
)
from uniflux.sampling import RngStream

PARAMS = SimParams(epsilon=1.0, gamma=1000.0, dt=1.0)


class TestAnalyticBrownian:
    def test_uniform_density_leading_term(self):
        probe = DensityProbe(p=1.0, dpdx=0.0, f_at_x1=0.0)
        j = analytic_uf_brownian(probe, PARAMS, window=1.0)
        assert j.j_lr == pytest.approx(0.017841241161527712, rel=1e-12)
        assert j.j_rl == pytest.approx(j.j_lr)
        assert j.j_net == 0.0

    def test_equilibrium_profile_balances(self):
        # p' = f*p/eps makes the correction vanish for any window
        params = SimParams(epsilon=2.0, gamma=50.0, dt=1.0)
        probe = DensityProbe(p=1.5, dpdx=0.5 * 1.5 / 2.0, f_at_x1=0.5)
        for window in (0.01, 1.0, 7.3):
            j = analytic_uf_brownian(probe, params, window)
            assert j.j_lr == pytest.approx(j.j_rl, rel=1e-13)

    def test_vacuum(self):
        j = analytic_uf_brownian(DensityProbe(0.0, 0.0, 0.0), PARAMS, 1.0)
        assert j == (0.0, 0.0, 0.0)

    def test_net_flux_window_independent(self):
        probe = DensityProbe(p=2.0, dpdx=-3.0, f_at_x1=0.7)
        nets = {analytic_uf_brownian(probe, PARAMS, w).j_net for w in (0.001, 0.5, 2.0, 40.0)}
        assert max(nets) - min(nets) < 1e-15

    def test_leading_term_window_scaling(self):
        probe = DensityProbe(p=1.0, dpdx=0.0, f_at_x1=0.0)
        j1 = analytic_uf_brownian(probe, PARAMS, 1.0).j_lr
        j4 = analytic_uf_brownian(probe, PARAMS, 4.0).j_lr
        assert j1 / j4 == pytest.approx(2.0, rel=1e-14)

    def test_rejects_bad_window(self):
        with pytest.raises(ValueError):
            analytic_uf_brownian(DensityProbe(1.0, 0.0, 0.0), PARAMS, 0.0)


class TestAnalyticLangevin:
    def test_uniform_density(self):
        j = analytic_uf_langevin(DensityProbe(1.0, 0.0, 0.0), PARAMS)
        assert j.j_lr == pytest.approx(math.sqrt(1.0 / (2.0 * math.pi)), rel=1e-12)
        assert j.j_rl == pytest.approx(j.j_lr)

    def test_gradient_net_flux(self):
        j = analytic_uf_langevin(DensityProbe(1.0, 1.0, 0.0), PARAMS)
        assert j.j_net == pytest.approx(-0.001, rel=1e-12)

    def test_vacuum(self):
        assert analytic_uf_langevin(DensityProbe(0.0, 0.0, 0.0), PARAMS) == (0.0, 0.0, 0.0)

    def test_antisymmetry_under_reflection(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            probe = DensityProbe(float(rng.uniform(0, 4)), float(rng.uniform(-4, 4)), float(rng.uniform(-2, 2)))
            mirror = DensityProbe(probe.p, -probe.dpdx, -probe.f_at_x1)
            a = analytic_uf_langevin(probe, PARAMS)
            b = analytic_uf_langevin(mirror, PARAMS)
            assert a.j_lr == pytest.approx(b.j_rl, rel=1e-12, abs=1e-15)
            w = float(rng.uniform(0.01, 10.0))
            c = analytic_uf_brownian(probe, PARAMS, w)
            d = analytic_uf_brownian(mirror, PARAMS, w)
            assert c.j_lr == pytest.approx(d.j_rl, rel=1e-12, abs=1e-15)


class TestMatchingIdentity:
    def test_uniform_probe(self):
        assert matching_identity_check(DensityProbe(1.0, 0.0, 0.0), PARAMS) < 1e-12

    def test_general_probe(self):
        params = SimParams(epsilon=2.0, gamma=50.0, dt=1.0)
        probe = DensityProbe(p=2.0, dpdx=-3.0, f_at_x1=0.5)
        assert matching_identity_check(probe, params) < 1e-12 * analytic_uf_langevin(probe, params).j_lr

    def test_thousand_random_probes(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            probe = DensityProbe(float(rng.uniform(0.05, 5)), float(rng.uniform(-5, 5)), float(rng.uniform(-3, 3)))
            params = SimParams(float(rng.uniform(0.1, 5)), float(rng.uniform(1, 2000)), 1.0)
            scale = max(abs(v) for v in analytic_uf_langevin(probe, params))
            assert matching_identity_check(probe, params) <= 1e-12 * max(scale, 1e-300)

    def test_wrong_window_gap(self):
        # gamma*dt = 1 leaves the closed-form leading-term gap
        probe = DensityProbe(1.0, 0.0, 0.0)
        gap = matching_identity_check(probe, PARAMS, window=1.0 / PARAMS.gamma)
        assert gap == pytest.approx(0.16524730314632366, rel=1e-10)


class TestCountCrossings:
    def test_empty(self):
        est = count_crossings([], [], 0.5, total_time=1.0, window=1.0)
        assert est.j_lr == 0.0 and est.j_rl == 0.0 and est.j_net == 0.0

    def test_single_directed_crossing(self):
        est = count_crossings([0.4], [0.6], 0.5, total_time=1.0, window=1.0)
        assert est.j_lr == pytest.approx(1.0)
        assert est.j_rl == 0.0

    def test_landing_on_probe_counts_left_to_right(self):
        est = count_crossings([0.4], [0.5], 0.5, total_time=1.0, window=1.0)
        assert est.j_lr == pytest.approx(1.0)
        est = count_crossings([0.5], [0.4], 0.5, total_time=1.0, window=1.0)
        assert est.j_rl == pytest.approx(1.0)

    def test_net_equals_transport_exactly(self):
        # telescoping over one trajectory: j_lr - j_rl = net side change
        rng = np.random.default_rng(7)
        path = np.cumsum(rng.normal(0.0, 1.0, 10_000))
        est = count_crossings(path[:-1], path[1:], 0.3, total_time=123.0, window=1.0)
        started_left = path[0] < 0.3
        ends_right = path[-1] >= 0.3
        expected_net = (1 if (started_left and ends_right) else 0) - (1 if (not started_left and not ends_right) else 0)
        assert est.j_net * 123.0 == pytest.approx(expected_net)

    def test_ensemble_normalization(self):
        est = count_crossings([0.4, 0.4], [0.6, 0.6], 0.5, total_time=1.0, window=1.0, ensemble_size=2)
        assert est.j_lr == pytest.approx(1.0)

    def test_rejects_zero_total_time(self):
        with pytest.raises(ValueError):
            count_crossings([0.4], [0.6], 0.5, total_time=0.0, window=1.0)

    def test_binomial_stderr(self):
        before = np.array([0.4] * 100 + [0.6] * 900)
        after = np.array([0.6] * 100 + [0.6] * 900)
        est = count_crossings(before, after, 0.5, total_time=10.0, window=1.0)
        assert est.stderr_lr == pytest.approx(math.sqrt(100 * 0.9) / 10.0)
        assert est.n_windows == 1000


class TestPeriodicHarness:
    def test_flux_matches_leading_law(self):
        res = periodic_equilibrium_flux(PARAMS, 0.5, 4000, 150, RngStream(30, 0))
        expected = math.sqrt(PARAMS.epsilon / (math.pi * PARAMS.gamma * PARAMS.dt)) * res.density
        for measured, se in ((res.estimate.j_lr, res.stderr_lr_ensemble), (res.estimate.j_rl, res.stderr_rl_ensemble)):
            assert abs(measured - expected) < 3.0 * se

    def test_probe_must_be_interior(self):
        with pytest.raises(ValueError):
            periodic_equilibrium_flux(PARAMS, 0.0, 10, 10, RngStream(31, 0))

    def test_rejects_oversized_steps(self):
        coarse = SimParams(epsilon=1.0, gamma=1.0, dt=1.0)  # step sigma sqrt(2) on unit box
        with pytest.raises(ValueError):
            periodic_equilibrium_flux(coarse, 0.5, 10, 10, RngStream(32, 0))


def _gaussian_grid(nx=200, nv=200, x_span=(-5.0, 5.0), v_span=(-8.0, 8.0), sx=0.1, sv=0.224):
    x_edges = np.linspace(*x_span, nx + 1)
    v_edges = np.linspace(*v_span, nv + 1)
    from scipy.stats import norm

    mx = np.diff(norm.cdf(x_edges / sx))
    mv = np.diff(norm.cdf(v_edges / sv))
    mass = np.outer(mx, mv)
    return mass / mass.sum(), x_edges, v_edges


class TestPropagator:
    def test_point_mass_deterministic_shift(self):
        # noise suppressed: all mass moves by eta*dt in x and stays one cell in v
        nx = nv = 201
        x_edges = np.linspace(-1.0, 1.0, nx + 1)
        v_edges = np.linspace(-1.0, 1.0, nv + 1)
        mass = np.zeros((nx, nv))
        iv = 150  # cell center eta
        mass[100, iv] = 1.0
        eta = 0.5 * (v_edges[iv] + v_edges[iv + 1])
        dt = 0.05
        out = propagate_phase_space_grid(mass, x_edges, v_edges, dt, gamma=0.0, sigma_v=0.0,
                                         force=ForceField.zero())
        assert out.sum() == pytest.approx(1.0)
        ix_new, iv_new = np.unravel_index(np.argmax(out), out.shape)
        xc = 0.5 * (x_edges[100] + x_edges[101])
        expected_ix = np.searchsorted(x_edges, xc + eta * dt, side="right") - 1
        assert ix_new == expected_ix
        assert iv_new == iv  # gamma = 0, f = 0: velocity unchanged

    def test_mass_conserved_on_wide_grid(self):
        mass, xe, ve = _gaussian_grid()
        params = SimParams(epsilon=1.0, gamma=1.0, dt=0.1, domain_lo=-5, domain_hi=5)
        check = propagator_step_check(mass, xe, ve, params, ForceField.zero(), RngStream(33, 0),
                                      n_samples=20_000)
        assert check.mass_after == pytest.approx(1.0, abs=1e-6)

    def test_l1_close_to_monte_carlo(self):
        mass, xe, ve = _gaussian_grid()
        params = SimParams(epsilon=1.0, gamma=1.0, dt=0.1, domain_lo=-5, domain_hi=5)
        check = propagator_step_check(mass, xe, ve, params, ForceField.zero(), RngStream(34, 0),
                                      n_samples=1_000_000)
        assert check.l1_distance <= 0.02

    def test_rejects_coarse_time_step(self):
        mass, xe, ve = _gaussian_grid()
        params = SimParams(epsilon=1.0, gamma=10.0, dt=0.1, domain_lo=-5, domain_hi=5)
        with pytest.raises(ValueError, match="gamma"):
            propagator_step_check(mass, xe, ve, params, ForceField.zero(), RngStream(35, 0), 1000)

    def test_rejects_small_grid(self):
        mass, xe, ve = _gaussian_grid(nx=100, nv=210)
        params = SimParams(epsilon=1.0, gamma=1.0, dt=0.1, domain_lo=-5, domain_hi=5)
        with pytest.raises(ValueError, match="200"):
            propagator_step_check(mass, xe, ve, params, ForceField.zero(), RngStream(36, 0), 1000)

    def test_rejects_coarse_velocity_cells(self):
        mass, xe, ve = _gaussian_grid(v_span=(-40.0, 40.0))  # cell 0.4 > sigma_v/5
        params = SimParams(epsilon=1.0, gamma=1.0, dt=0.1, domain_lo=-5, domain_hi=5)
        with pytest.raises(ValueError, match="coarse"):
            propagator_step_check(mass, xe, ve, params, ForceField.zero(), RngStream(37, 0), 1000)

    def test_grid_step_with_force_shifts_velocity_mean(self):
        # constant acceleration adds f*dt to every velocity mean
        nx = nv = 200
        xe = np.linspace(-2, 2, nx + 1)
        ve = np.linspace(-2, 2, nv + 1)
        mass = np.zeros((nx, nv))
        mass[100, 100] = 1.0
        vc = 0.5 * (ve[:-1] + ve[1:])
        out_free = propagate_phase_space_grid(mass, xe, ve, 0.1, 0.0, 0.05, ForceField.zero())
        out_forced = propagate_phase_space_grid(mass, xe, ve, 0.1, 0.0, 0.05, ForceField.constant(2.0))
        mean_free = float((out_free.sum(axis=0) * vc).sum())
        mean_forced = float((out_forced.sum(axis=0) * vc).sum())
        assert mean_forced - mean_free == pytest.approx(2.0 * 0.1, abs=1e-3)

    def test_mc_histogram_total_mass(self):
        mass, xe, ve = _gaussian_grid()
        hist = mc_one_step_histogram(mass, xe, ve, 0.1, 1.0, 0.447, ForceField.zero(), RngStream(38, 0), 50_000)
        assert hist.sum() == pytest.approx(1.0, abs=1e-9)
