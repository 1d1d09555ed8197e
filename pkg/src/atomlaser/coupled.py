"""Coupled condensate / thermal-cloud system in SI units.

    dphi/dt = i(hbar/2m) lap(phi) + (Gamma n_u - gamma_c)/2 phi - i (g/hbar + Omega V)|phi|^2 phi
    dn_u/dt = R(x) - gamma_u n_u - Gamma |phi|^2 n_u + D_r lap(n_u)

Used as an oracle for the adiabatic closure that leads to the CGLE. The grid is
shared with :mod:`atomlaser.cgle` and measured in units of l0; diagnostics are
reported for the rescaled field sqrt(amp2_scale) * phi at tau = gamma_c t so
that they compare directly with CGLE records.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import cgle
from .cgle import DiagnosticsRecord, Grid
from .errors import BlowUpError, StabilityGuardError
from .params import HBAR, PhysicalParams, reduce
from .stability import most_unstable_mode

log = logging.getLogger(__name__)

GUARD = 0.1
MIN_SEPARATION = 10.0


@dataclass(frozen=True, eq=False)
class CoupledState:
    grid: Grid
    phi: np.ndarray  # m^-3/2
    n_u: np.ndarray  # m^-3
    t: float = 0.0


@dataclass(frozen=True)
class CoupledConfig:
    dt: float = 2e-5
    t_end: float = 0.4
    record_every: int = 100
    pump_profile: str = "uniform"
    pump_radius: float = 25.0  # units of l0, only for "truncated"
    seed: int = 0
    noise_amp: float = 1e-3  # in rescaled CGLE amplitude units

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.pump_profile not in ("uniform", "truncated"):
            raise ValueError(f"unknown pump profile {self.pump_profile!r}")


def length_scale(p: PhysicalParams) -> float:
    """l0 in metres; falls back to sqrt(D_r/gamma_c) when R*Gamma = 0."""
    if p.R * p.Gamma > 0:
        return reduce(p).l0
    return math.sqrt(p.D_r / p.gamma_c)


def amplitude_scale(p: PhysicalParams) -> float:
    """amp2_scale in m^3, or 1.0 when the reduction is degenerate."""
    return reduce(p).amp2_scale if p.R * p.Gamma > 0 else 1.0


def pump(p: PhysicalParams, grid: Grid, config: CoupledConfig) -> np.ndarray:
    if config.pump_profile == "uniform":
        return np.full(grid.shape, p.R)
    centre = 0.5 * grid.length
    r2 = sum((c - centre) ** 2 for c in grid.coords())
    return np.where(r2 <= config.pump_radius**2, p.R, 0.0)


def _laplacian(f: np.ndarray, grid: Grid, l0: float) -> np.ndarray:
    out = np.fft.ifftn(-grid.k_squared() / l0**2 * np.fft.fftn(f))
    return out.real if np.isrealobj(f) else out


def quasi_static_nu(phi: np.ndarray, p: PhysicalParams, grid: Grid | None = None) -> np.ndarray:
    """Adiabatic n_u slaved to phi, first order in Gamma|phi|^2/gamma_u.

    n_u = (R/gamma_u) [1 - (Gamma/gamma_u)(|phi|^2 + (D_r/gamma_u) lap|phi|^2)]

    The Laplacian acts spectrally on |phi|^2; ``grid`` (in l0 units) is needed
    only when phi is non-uniform.
    """
    rho = np.abs(phi) ** 2
    if grid is not None:
        inner = rho + p.D_r / p.gamma_u * _laplacian(rho, grid, length_scale(p))
    else:
        inner = rho
    return p.R / p.gamma_u * (1.0 - p.Gamma / p.gamma_u * inner)


def stationary_point(p: PhysicalParams) -> tuple[float, float]:
    """Uniform lasing fixed point (n_c, n_u) of the coupled system under uniform pumping."""
    n_c = (p.R * p.Gamma / p.gamma_c - p.gamma_u) / p.Gamma
    return n_c, p.gamma_c / p.Gamma


def coupled_rhs(phi: np.ndarray, n_u: np.ndarray, p: PhysicalParams, grid: Grid, r_field=None):
    """Time derivatives (dphi/dt, dn_u/dt)."""
    l0 = length_scale(p)
    r_field = p.R if r_field is None else r_field
    rho = np.abs(phi) ** 2
    g_eff = p.g_over_hbar + p.Omega * p.V
    dphi = (
        1j * HBAR / (2 * p.mass) * _laplacian(phi, grid, l0)
        + 0.5 * (p.Gamma * n_u - p.gamma_c) * phi
        - 1j * g_eff * rho * phi
    )
    dn = r_field - p.gamma_u * n_u - p.Gamma * rho * n_u + p.D_r * _laplacian(n_u, grid, l0)
    return dphi, dn


class CoupledStepper:
    """Symmetric splitting: n_u(h/2) phi(h/2) linear(h) phi(h/2) n_u(h/2).

    Local substeps are exact exponential integrators with the partner field
    frozen; the kinetic and diffusion parts are exact in Fourier space.
    """

    def __init__(self, p: PhysicalParams, grid: Grid, config: CoupledConfig, dt: float):
        self.p = p
        self.grid = grid
        self.dt = dt
        self.l0 = length_scale(p)
        self.r_field = pump(p, grid, config)
        k2 = grid.k_squared() / self.l0**2
        self.kinetic = np.exp(-1j * HBAR / (2 * p.mass) * k2 * dt)
        self.diffusion = np.exp(-p.D_r * k2 * dt)
        self.g_eff = p.g_over_hbar + p.Omega * p.V
        self.clamped = 0
        self.min_nu_ratio = 0.0  # min n_u / (R/gamma_u) before clamping

    def _nu_local(self, phi, n_u, h):
        a = self.p.gamma_u + self.p.Gamma * (phi.real**2 + phi.imag**2)
        n_star = self.r_field / a
        return n_star + (n_u - n_star) * np.exp(-a * h)

    def _phi_local(self, phi, n_u, h):
        rate = self.p.Gamma * n_u - self.p.gamma_c  # growth rate of |phi|^2
        rho0 = phi.real**2 + phi.imag**2
        x = rate * h
        growth = np.exp(x)
        # integral of rho over the substep, rho0 * expm1(x)/rate, with the rate -> 0 limit
        small = np.abs(x) < 1e-8
        safe_rate = np.where(small, 1.0, rate)
        integral = np.where(small, rho0 * h * (1 + 0.5 * x), rho0 * np.expm1(x) / safe_rate)
        return phi * np.sqrt(growth) * np.exp(-1j * self.g_eff * integral)

    def advance(self, phi, n_u):
        h = 0.5 * self.dt
        n_u = self._nu_local(phi, n_u, h)
        phi = self._phi_local(phi, n_u, h)
        phi = np.fft.ifftn(self.kinetic * np.fft.fftn(phi))
        n_u = np.fft.ifftn(self.diffusion * np.fft.fftn(n_u)).real
        phi = self._phi_local(phi, n_u, h)
        n_u = self._nu_local(phi, n_u, h)
        nu_ref = self.p.R / self.p.gamma_u if self.p.R > 0 else 1.0
        low = float(n_u.min())
        if low < 0:
            self.min_nu_ratio = min(self.min_nu_ratio, low / nu_ref)
            self.clamped += int(np.count_nonzero(n_u < 0))
            n_u = np.maximum(n_u, 0.0)
        return phi, n_u

    def stiffness(self, phi, n_u) -> float:
        p = self.p
        rho_max = float(np.max(np.abs(phi) ** 2))
        return self.dt * max(p.gamma_u, p.Gamma * float(n_u.max()), abs(self.g_eff) * rho_max)

    def check(self, phi, n_u, t):
        s = self.stiffness(phi, n_u)
        if not math.isfinite(s):
            raise BlowUpError(f"coupled fields became non-finite at t = {t:.6g} s", t)
        if s >= GUARD:
            raise StabilityGuardError(f"stiffness guard violated at t = {t:.6g} s: dt*rate = {s:.3g}")


def scaled_diagnostics(state: CoupledState, p: PhysicalParams, probes=()) -> DiagnosticsRecord:
    psi = math.sqrt(amplitude_scale(p)) * state.phi
    return cgle.diagnostics(cgle.FieldState(state.grid, psi, p.gamma_c * state.t), probes)


def initial_coupled_state(
    p: PhysicalParams, grid: Grid, config: CoupledConfig, psi: np.ndarray | None = None
) -> CoupledState:
    """phi from a rescaled field ``psi`` (default: sqrt(eps) plus seeded noise), n_u quasi-static."""
    if psi is None:
        rp = reduce(p)
        psi = cgle.init_state(
            grid, "homogeneous", rp, cgle.SolverConfig(seed=config.seed, noise_amp=config.noise_amp)
        ).phi
    phi = np.asarray(psi, dtype=complex) / math.sqrt(amplitude_scale(p))
    n_u = np.maximum(quasi_static_nu(phi, p, grid), 0.0)
    return CoupledState(grid, phi, n_u, 0.0)


def run_coupled(
    p: PhysicalParams,
    grid: Grid,
    config: CoupledConfig,
    initial: CoupledState | None = None,
    probes=(),
) -> tuple[list[CoupledState], list[DiagnosticsRecord]]:
    """Integrate the coupled system; returns snapshots and rescaled diagnostics.

    Snapshots and records are taken at the start, every ``record_every`` steps and at the end.
    The step count is ceil(t_end/dt) with dt shrunk to land on t_end.
    """
    state = initial if initial is not None else initial_coupled_state(p, grid, config)
    n_steps = math.ceil(config.t_end / config.dt - 1e-9) if config.t_end > 0 else 0
    dt = config.t_end / n_steps if n_steps else config.dt
    stepper = CoupledStepper(p, grid, config, dt)
    stepper.check(state.phi, state.n_u, state.t)
    trajectory = [state]
    records = [scaled_diagnostics(state, p, probes)]
    phi, n_u, t0 = state.phi, state.n_u, state.t
    for i in range(1, n_steps + 1):
        phi, n_u = stepper.advance(phi, n_u)
        t = t0 + i * dt
        if i % config.record_every == 0 or i == n_steps:
            stepper.check(phi, n_u, t)
            snap = CoupledState(grid, phi, n_u, t)
            trajectory.append(snap)
            records.append(scaled_diagnostics(snap, p, probes))
    if stepper.clamped:
        log.warning(
            "clamped %d negative n_u values (min n_u/(R/gamma_u) = %.3g)",
            stepper.clamped,
            stepper.min_nu_ratio,
        )
    return trajectory, records


@dataclass
class DiscrepancyReport:
    rel_l2_density: float
    growth_rate_closed: float
    growth_rate_coupled: float
    growth_rate_diff: float
    max_nu_deviation: float
    contrast_closed: float
    contrast_coupled: float
    separation: float
    closure_parameter: float
    separation_ok: bool
    coupling_ok: bool
    probe_q: float
    tau_end: float

    def to_text(self) -> str:
        lines = []
        for key, value in vars(self).items():
            if isinstance(value, bool):
                value = int(value)
            lines.append(f"{key} = {value:.9g}" if isinstance(value, float) else f"{key} = {value}")
        return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict[str, float]:
    out = {}
    for line in text.splitlines():
        if "=" in line:
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = float(value)
    return out


def _snapshot_plan(t_end: float, dt_max: float, n_snapshots: int) -> tuple[float, int]:
    """(dt, steps per snapshot) so that snapshots land on a uniform time lattice."""
    per = math.ceil(t_end / n_snapshots / dt_max - 1e-9)
    return t_end / (n_snapshots * per), per


def compare_closed_vs_coupled(
    p: PhysicalParams,
    grid: Grid,
    config: CoupledConfig,
    closed_dt: float = 1e-2,
    n_snapshots: int = 200,
    probe_q: float | None = None,
    window: tuple[float, float] | None = None,
) -> DiscrepancyReport:
    """Run the closed CGLE and the coupled system from the same initial phi and compare.

    Both runs cover ``config.t_end`` seconds (tau_end = gamma_c t_end). Snapshots are
    synchronised on ``n_snapshots`` uniform intervals. Growth rates are fitted on the
    probe mode over ``window`` (default: the middle 40-80% of the horizon). Regime
    violations are reported as flags, not raised.
    """
    separation = p.gamma_u / p.gamma_c
    coupling_ok = p.R * p.Gamma > 0
    tau_end = p.gamma_c * config.t_end
    if not separation >= MIN_SEPARATION:
        log.warning("gamma_u/gamma_c = %.3g below %.0f: adiabatic regime not satisfied", separation, MIN_SEPARATION)
    dt_c, per_c = _snapshot_plan(config.t_end, config.dt, n_snapshots)
    cfg_c = CoupledConfig(
        dt=dt_c,
        t_end=config.t_end,
        record_every=per_c,
        pump_profile=config.pump_profile,
        pump_radius=config.pump_radius,
        seed=config.seed,
        noise_amp=config.noise_amp,
    )

    if not coupling_ok:
        log.warning("R*Gamma = 0: the closed equation has no gain, reduction invalid")
        zero = CoupledState(grid, np.zeros(grid.shape, complex), np.zeros(grid.shape), 0.0)
        traj, _ = run_coupled(p, grid, cfg_c, initial=zero)
        nan = float("nan")
        return DiscrepancyReport(
            rel_l2_density=nan,
            growth_rate_closed=nan,
            growth_rate_coupled=nan,
            growth_rate_diff=nan,
            max_nu_deviation=float(np.max(np.abs(traj[-1].n_u - p.R / p.gamma_u))) / max(p.R / p.gamma_u, 1e-300),
            contrast_closed=nan,
            contrast_coupled=cgle.modulation_contrast(traj[-1].phi),
            separation=separation,
            closure_parameter=nan,
            separation_ok=separation >= MIN_SEPARATION,
            coupling_ok=False,
            probe_q=nan,
            tau_end=tau_end,
        )

    rp = reduce(p)
    if probe_q is None:
        q_star, _ = most_unstable_mode(rp.epsilon, rp.c1, rp.c2) if rp.epsilon > 0 else (0.0, 0.0)
        probe_q = q_star if q_star > 0 else grid.dk
    probe_q = grid.snap(probe_q)[1]
    if window is None:
        window = (0.4 * tau_end, 0.8 * tau_end)

    start = initial_coupled_state(p, grid, cfg_c)
    psi0 = math.sqrt(rp.amp2_scale) * start.phi
    traj, rec_coupled = run_coupled(p, grid, cfg_c, initial=start, probes=[probe_q])

    dt_cl, per_cl = _snapshot_plan(tau_end, closed_dt, n_snapshots)
    closed_cfg = cgle.SolverConfig(dt=dt_cl, t_end=tau_end, record_every=per_cl)
    state = cgle.FieldState(grid, psi0, 0.0)
    closed_hist = [np.abs(psi0) ** 2]
    rec_closed = [cgle.diagnostics(state, [probe_q])]
    stepper = cgle.Stepper(grid, rp, dt_cl)
    phi = psi0
    for i in range(1, n_snapshots * per_cl + 1):
        phi = stepper.advance(phi)
        if i % per_cl == 0:
            tau = i * dt_cl
            stepper.check(phi, tau)
            closed_hist.append(np.abs(phi) ** 2)
            rec_closed.append(cgle.diagnostics(cgle.FieldState(grid, phi, tau), [probe_q]))

    coupled_hist = np.array([rp.amp2_scale * np.abs(s.phi) ** 2 for s in traj])
    closed_hist = np.array(closed_hist)
    rel_l2 = float(np.linalg.norm(coupled_hist - closed_hist) / np.linalg.norm(coupled_hist))

    nu_ref = p.R / p.gamma_u
    nu_dev = max(float(np.max(np.abs(s.n_u - quasi_static_nu(s.phi, p, grid)))) for s in traj) / nu_ref
    closure = max(float(np.max(p.Gamma * np.abs(s.phi) ** 2)) for s in traj) / p.gamma_u

    g_closed = cgle.measured_growth_rate(rec_closed, probe_q, window)
    g_coupled = cgle.measured_growth_rate(rec_coupled, probe_q, window)
    return DiscrepancyReport(
        rel_l2_density=rel_l2,
        growth_rate_closed=g_closed,
        growth_rate_coupled=g_coupled,
        growth_rate_diff=g_coupled - g_closed,
        max_nu_deviation=nu_dev,
        contrast_closed=max(r.modulation_contrast for r in rec_closed),
        contrast_coupled=max(r.modulation_contrast for r in rec_coupled),
        separation=separation,
        closure_parameter=closure,
        separation_ok=separation >= MIN_SEPARATION,
        coupling_ok=True,
        probe_q=probe_q,
        tau_end=tau_end,
    )


def scale_separation(p: PhysicalParams, factor: float) -> PhysicalParams:
    """Scale gamma_u, Gamma and D_r together by ``factor``.

    R*Gamma/gamma_u and every reduced coefficient and scale are unchanged, so the
    closed equation is identical while the thermal cloud gets faster.
    """
    return p.replace(gamma_u=p.gamma_u * factor, Gamma=p.Gamma * factor, D_r=p.D_r * factor)
