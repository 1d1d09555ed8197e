import logging
import math

import numpy as np
import pytest

from atomlaser import cgle, coupled
from atomlaser.cgle import Grid
from atomlaser.coupled import CoupledConfig, CoupledState
from atomlaser.errors import StabilityGuardError
from atomlaser.params import preset, reduce

SMALL = Grid(1, 16, 10.0)


def uniform_state(p, grid, n_c, n_u, t=0.0):
    return CoupledState(grid, np.full(grid.shape, math.sqrt(n_c), complex), np.full(grid.shape, float(n_u)), t)


def test_pump_relaxation_without_condensate(rb87):
    cfg = CoupledConfig(dt=1e-5, t_end=2e-3, record_every=20)
    traj, _ = coupled.run_coupled(rb87, SMALL, cfg, initial=uniform_state(rb87, SMALL, 0.0, 0.0))
    for s in traj:
        exact = rb87.R / rb87.gamma_u * -math.expm1(-rb87.gamma_u * s.t)
        np.testing.assert_allclose(s.n_u, exact, rtol=1e-8, atol=1e-8 * rb87.R / rb87.gamma_u)
        assert not s.phi.any()


def test_stationary_point_algebra(rb87, li7):
    for p in (rb87, li7):
        n_c, n_u = coupled.stationary_point(p)
        assert n_c == pytest.approx((p.R * p.Gamma / p.gamma_c - p.gamma_u) / p.Gamma)
        assert n_u == pytest.approx(p.R / (p.gamma_u + p.Gamma * n_c), rel=1e-12)
        assert p.Gamma * n_u == pytest.approx(p.gamma_c, rel=1e-12)


def test_stationary_point_residuals(rb87, li7):
    for p in (rb87, li7):
        n_c, n_u = coupled.stationary_point(p)
        s = uniform_state(p, SMALL, n_c, n_u)
        dphi, dn = coupled.coupled_rhs(s.phi, s.n_u, p, SMALL)
        drho = 2 * np.real(np.conj(s.phi) * dphi)
        assert np.max(np.abs(drho)) / (p.gamma_c * n_c) < 1e-8
        assert np.max(np.abs(dn)) / p.R < 1e-8


def test_stationary_point_is_preserved(rb87):
    n_c, n_u = coupled.stationary_point(rb87)
    cfg = CoupledConfig(dt=2e-5, t_end=0.02, record_every=100)
    traj, _ = coupled.run_coupled(rb87, SMALL, cfg, initial=uniform_state(rb87, SMALL, n_c, n_u))
    np.testing.assert_allclose(np.abs(traj[-1].phi) ** 2, n_c, rtol=1e-8)
    np.testing.assert_allclose(traj[-1].n_u, n_u, rtol=1e-8)


def test_quasi_static_examples(rb87):
    zero = np.zeros(SMALL.shape, complex)
    np.testing.assert_allclose(coupled.quasi_static_nu(zero, rb87, SMALL), rb87.R / rb87.gamma_u)
    n_c = 0.1 * rb87.gamma_u / rb87.Gamma
    phi = np.full(SMALL.shape, math.sqrt(n_c), complex)
    np.testing.assert_allclose(coupled.quasi_static_nu(phi, rb87, SMALL), 0.9 * rb87.R / rb87.gamma_u, rtol=1e-12)
    np.testing.assert_allclose(coupled.quasi_static_nu(phi, rb87), 0.9 * rb87.R / rb87.gamma_u, rtol=1e-12)


def test_quasi_static_first_order_bound(rb87):
    for x in np.linspace(0.0, 0.3, 31):
        phi = np.full(SMALL.shape, math.sqrt(x * rb87.gamma_u / rb87.Gamma), complex)
        approx = coupled.quasi_static_nu(phi, rb87, SMALL)[0]
        exact = rb87.R / (rb87.gamma_u + rb87.Gamma * abs(phi[0]) ** 2)
        assert abs(approx - exact) / exact <= x * x + 1e-15


def test_quasi_static_gradient_term(rb87):
    # the Laplacian acts on |phi|^2: a single cosine mode of the density
    grid = Grid(1, 64, 20.0)
    l0 = reduce(rb87).l0
    k = grid.dk / l0
    x = grid.x() * l0
    rho = 1e17 * (1 + 0.5 * np.cos(k * x))
    nu = coupled.quasi_static_nu(np.sqrt(rho).astype(complex), rb87, grid)
    lap = -k * k * 0.5e17 * np.cos(k * x)
    expected = rb87.R / rb87.gamma_u * (1 - rb87.Gamma / rb87.gamma_u * (rho + rb87.D_r / rb87.gamma_u * lap))
    np.testing.assert_allclose(nu, expected, rtol=1e-10)


def test_rb87_coupled_relaxes_to_uniform(rb87):
    grid = Grid(1, 64, 100.0)
    n_c, n_u = coupled.stationary_point(rb87)
    rng = np.random.default_rng(1)
    phi = math.sqrt(n_c) * (1 + 1e-3 * (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)))
    start = CoupledState(grid, phi, np.full(grid.shape, n_u))
    cfg = CoupledConfig(dt=5e-5, t_end=0.4, record_every=400)
    _, records = coupled.run_coupled(rb87, grid, cfg, initial=start)
    assert records[-1].modulation_contrast < records[0].modulation_contrast
    assert max(r.modulation_contrast for r in records) < 10 * records[0].modulation_contrast


def test_positivity_and_determinism(rb87):
    grid = Grid(1, 64, 100.0)
    cfg = CoupledConfig(dt=5e-5, t_end=0.05, record_every=100, seed=3, noise_amp=1e-2)
    start = coupled.initial_coupled_state(rb87, grid, cfg)
    stepper = coupled.CoupledStepper(rb87, grid, cfg, cfg.dt)
    phi, n_u = start.phi, start.n_u
    for _ in range(1000):
        phi, n_u = stepper.advance(phi, n_u)
    assert stepper.min_nu_ratio >= -1e-12
    a, ra = coupled.run_coupled(rb87, grid, cfg)
    b, rb = coupled.run_coupled(rb87, grid, cfg)
    assert a[-1].phi.tobytes() == b[-1].phi.tobytes()
    assert a[-1].n_u.tobytes() == b[-1].n_u.tobytes()
    assert ra == rb


def test_truncated_pump(rb87, caplog):
    grid = Grid(1, 64, 100.0)
    cfg = CoupledConfig(dt=5e-5, t_end=0.01, record_every=50, pump_profile="truncated", pump_radius=20.0)
    r = coupled.pump(rb87, grid, cfg)
    assert r.max() == rb87.R and r.min() == 0.0
    assert np.count_nonzero(r) == np.count_nonzero(np.abs(grid.x() - 50.0) <= 20.0)
    with caplog.at_level(logging.WARNING):
        traj, _ = coupled.run_coupled(rb87, grid, cfg)
    assert all((s.n_u >= 0).all() for s in traj)
    assert traj[-1].n_u[0] < traj[-1].n_u[32]


def test_stiffness_guard(rb87):
    with pytest.raises(StabilityGuardError):
        coupled.run_coupled(rb87, SMALL, CoupledConfig(dt=1e-3, t_end=0.01))


def test_records_rescaled(rb87):
    rp = reduce(rb87)
    cfg = CoupledConfig(dt=5e-5, t_end=1e-3, record_every=10, noise_amp=0.0)
    traj, records = coupled.run_coupled(rb87, SMALL, cfg)
    assert records[0].mean_density == pytest.approx(rp.epsilon, rel=1e-12)
    assert records[-1].tau == pytest.approx(rb87.gamma_c * 1e-3)


def test_compare_degenerate_coupling(rb87):
    p = rb87.replace(Gamma=0.0)
    report = coupled.compare_closed_vs_coupled(p, SMALL, CoupledConfig(dt=5e-5, t_end=5e-3), n_snapshots=5)
    assert not report.coupling_ok
    assert math.isnan(report.rel_l2_density)
    text = report.to_text()
    assert "coupling_ok = 0" in text


def test_report_round_trip(rb87):
    p = rb87.replace(R=1.05 * rb87.gamma_u * rb87.gamma_c / rb87.Gamma)
    report = coupled.compare_closed_vs_coupled(p, Grid(1, 32, 50.0), CoupledConfig(dt=5e-5, t_end=0.05), n_snapshots=20)
    parsed = coupled.parse_report(report.to_text())
    assert set(parsed) == set(vars(report))
    assert parsed["rel_l2_density"] == pytest.approx(report.rel_l2_density, rel=1e-8)
    assert parsed["separation_ok"] == 1.0


@pytest.mark.parametrize("x, bound", [(1.05, 0.10), (1.1, 0.10)])
def test_closure_accurate_near_threshold(rb87, x, bound):
    # The closure expands in Gamma|phi|^2/gamma_u, which is ~ (x - 1) for x = R Gamma/(gamma_u gamma_c)
    p = rb87.replace(R=x * rb87.gamma_u * rb87.gamma_c / rb87.Gamma)
    grid = Grid(1, 128, 100.0)
    report = coupled.compare_closed_vs_coupled(p, grid, CoupledConfig(dt=0.05 / p.gamma_u, t_end=20 / p.gamma_c))
    assert report.rel_l2_density <= bound
    assert report.separation_ok


def test_closure_error_shrinks_towards_threshold(rb87):
    grid = Grid(1, 64, 100.0)
    errors = []
    for x in (1.4, 1.2, 1.1, 1.05):
        p = rb87.replace(R=x * rb87.gamma_u * rb87.gamma_c / rb87.Gamma)
        cfg = CoupledConfig(dt=0.05 / p.gamma_u, t_end=20 / p.gamma_c)
        errors.append(coupled.compare_closed_vs_coupled(p, grid, cfg, n_snapshots=50).rel_l2_density)
    assert errors == sorted(errors, reverse=True)


def test_scale_separation_keeps_reduction(rb87):
    a = reduce(rb87)
    for s in (1 / 3, 10 / 3):
        b = reduce(coupled.scale_separation(rb87, s))
        for f in ("epsilon", "c1", "c2", "l0", "amp2_scale"):
            assert getattr(b, f) == pytest.approx(getattr(a, f), rel=1e-12)


@pytest.fixture(scope="module")
def li7_report():
    p = preset("li7")
    cfg = CoupledConfig(dt=5e-5, t_end=60 / p.gamma_c, noise_amp=1e-2)
    return coupled.compare_closed_vs_coupled(p, Grid(1, 256, 100.0), cfg, window=(5.0, 25.0))


def test_li7_both_unstable(li7_report):
    assert not li7_report.separation_ok
    assert li7_report.contrast_closed >= 0.5
    assert li7_report.contrast_coupled >= 0.5


@pytest.mark.xfail(
    strict=True,
    reason="coupled system has no real diffusion on phi; its modulational growth (~1.8) "
    "far exceeds the closed CGLE rate (~0.12) at gamma_u/gamma_c = 1.74",
)
def test_li7_growth_rates_within_25_percent(li7_report):
    rel = abs(li7_report.growth_rate_coupled - li7_report.growth_rate_closed) / abs(li7_report.growth_rate_closed)
    assert rel <= 0.25
