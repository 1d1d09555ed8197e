"""Split-step pseudo-spectral integrator for the dimensionless CGLE on a periodic grid.

    dphi/dtau = eps*phi + (1 + i c1) lap(phi) - (1 + i c2) |phi|^2 phi

Strang splitting: half local substep, full linear substep, half local
substep. The linear part (1 + i c1) lap is exact in Fourier space. The gain
``eps`` sits in the local part, whose flow is exact: with rho0 = |phi|^2 and
s = 1 + rho0 (exp(2 eps h) - 1)/eps  (s = 1 + 2 rho0 h at eps = 0),

    phi <- phi exp(eps h) s^(-1/2) exp(-i (c2/2) ln s).

Keeping the gain local makes the homogeneous lasing state |phi|^2 = eps an
exact fixed point of every step, whatever dt.

FFTs use numpy's pocketfft, single-threaded, so runs are bitwise reproducible
for a given seed on a given machine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BelowThresholdError, BlowUpError, SolverError, StabilityGuardError
from .params import ReducedParams

BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class Grid:
    """Periodic grid; ``length`` is the domain size per axis in units of l0."""

    dim: int = 1
    n: int = 256
    length: float = 100.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"length must be > 0, got {self.length}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def volume(self) -> float:
        return self.length**self.dim

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / self.length

    def x(self) -> np.ndarray:
        return self.dx * np.arange(self.n)

    def k(self) -> np.ndarray:
        """Wavenumbers 2 pi j / length in FFT order, j in [-n/2, n/2)."""
        return 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.dx)

    def coords(self) -> tuple[np.ndarray, ...]:
        return np.meshgrid(*([self.x()] * self.dim), indexing="ij")

    def k_squared(self) -> np.ndarray:
        ks = np.meshgrid(*([self.k()] * self.dim), indexing="ij")
        return sum(kk * kk for kk in ks)

    def snap(self, q: float) -> tuple[int, float]:
        """Nearest lattice index and wavenumber for ``q`` along the first axis."""
        j = int(round(q / self.dk))
        if not -self.n // 2 <= j < self.n // 2:
            raise ValueError(f"wavenumber {q} outside lattice range for n={self.n}, length={self.length}")
        return j, j * self.dk


@dataclass(frozen=True, eq=False)
class FieldState:
    grid: Grid
    phi: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        if self.phi.shape != self.grid.shape:
            raise ValueError(f"phi shape {self.phi.shape} does not match grid {self.grid.shape}")

    def density(self) -> np.ndarray:
        return np.abs(self.phi) ** 2


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-2
    t_end: float = 100.0
    record_every: int = 10
    seed: int = 0
    noise_amp: float = 1e-3

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class DiagnosticsRecord:
    tau: float
    mass: float
    mean_density: float
    modulation_contrast: float
    mode_amplitudes: tuple[float, ...] = ()
    probes: tuple[float, ...] = field(default=(), compare=False)


def modulation_contrast(phi: np.ndarray) -> float:
    amp = np.abs(phi)
    hi, lo = float(amp.max()), float(amp.min())
    return 0.0 if hi + lo == 0 else (hi - lo) / (hi + lo)


def _probe_index(grid: Grid, q: float) -> tuple[int, ...]:
    j, _ = grid.snap(q)
    return (j % grid.n,) + (0,) * (grid.dim - 1)


def diagnostics(state: FieldState, probes=()) -> DiagnosticsRecord:
    grid = state.grid
    rho = state.density()
    mean_density = float(rho.mean())
    amps: tuple[float, ...] = ()
    if probes:
        spec = np.fft.fftn(state.phi) / state.phi.size
        amps = tuple(float(abs(spec[_probe_index(grid, q)])) for q in probes)
    return DiagnosticsRecord(
        tau=state.tau,
        mass=mean_density * grid.volume,
        mean_density=mean_density,
        modulation_contrast=modulation_contrast(state.phi),
        mode_amplitudes=amps,
        probes=tuple(float(q) for q in probes),
    )


def init_state(
    grid: Grid,
    kind: str,
    rp: ReducedParams | None = None,
    config: SolverConfig | None = None,
    *,
    q: float = 0.0,
    delta: float = 0.0,
    phi: np.ndarray | None = None,
) -> FieldState:
    """Build an initial field.

    kind is one of ``"homogeneous"`` (sqrt(eps) plus complex white noise of RMS
    ``config.noise_amp``), ``"plane-wave"`` (sqrt(eps)(1 + delta cos(q x)), q snapped
    to the lattice) or ``"custom"`` (``phi`` passed through).
    """
    if kind == "custom":
        if phi is None:
            raise ValueError("custom initial state needs phi")
        return FieldState(grid, np.array(phi, dtype=complex), 0.0)
    if rp is None or not rp.epsilon > 0:
        raise BelowThresholdError("homogeneous initial states need epsilon > 0")
    amp = math.sqrt(rp.epsilon)
    if kind == "homogeneous":
        config = config or SolverConfig()
        rng = np.random.default_rng(config.seed)
        noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        return FieldState(grid, amp + config.noise_amp / math.sqrt(2.0) * noise, 0.0)
    if kind == "plane-wave":
        _, q_lat = grid.snap(q)
        x = grid.coords()[0]
        return FieldState(grid, (amp * (1.0 + delta * np.cos(q_lat * x))).astype(complex), 0.0)
    raise ValueError(f"unknown initial-state kind {kind!r}")


def nonlinear_substep(phi: np.ndarray, c2: float, h: float, epsilon: float = 0.0) -> np.ndarray:
    """Exact flow of dphi/dtau = eps phi - (1 + i c2)|phi|^2 phi over ``h``."""
    x = 2.0 * epsilon * h
    # (exp(2 eps h) - 1)/eps, continuous through eps = 0
    growth = 2.0 * h if x == 0 else math.expm1(x) / epsilon
    log_s = np.log1p(growth * (phi.real**2 + phi.imag**2))
    return phi * np.exp(epsilon * h - 0.5 * log_s - 0.5j * c2 * log_s)


class Stepper:
    """Caches the spectral propagator for a fixed (grid, params, dt)."""

    def __init__(self, grid: Grid, rp: ReducedParams, dt: float):
        if not dt > 0:
            raise StabilityGuardError("dt must be > 0")
        if dt * rp.epsilon >= 0.5:
            raise StabilityGuardError(f"dt*epsilon = {dt * rp.epsilon:.3g} violates the 0.5 guard")
        self.grid = grid
        self.rp = rp
        self.dt = dt
        self.propagator = np.exp(-(1.0 + 1j * rp.c1) * grid.k_squared() * dt)
        self.blowup_level = BLOWUP_FACTOR * max(rp.epsilon, 1.0)

    def advance(self, phi: np.ndarray) -> np.ndarray:
        half = 0.5 * self.dt
        c2, eps = self.rp.c2, self.rp.epsilon
        phi = nonlinear_substep(phi, c2, half, eps)
        phi = np.fft.ifftn(self.propagator * np.fft.fftn(phi))
        return nonlinear_substep(phi, c2, half, eps)

    def check(self, phi: np.ndarray, tau: float) -> None:
        rho_max = float(np.max(phi.real**2 + phi.imag**2))
        if not math.isfinite(rho_max) or rho_max > self.blowup_level:
            raise BlowUpError(f"field blew up at tau = {tau:.6g} (max |phi|^2 = {rho_max:.3g})", tau)


def step(state: FieldState, rp: ReducedParams, dt: float) -> FieldState:
    stepper = Stepper(state.grid, rp, dt)
    phi = stepper.advance(state.phi)
    stepper.check(phi, state.tau + dt)
    return FieldState(state.grid, phi, state.tau + dt)


def run(
    state: FieldState,
    rp: ReducedParams,
    config: SolverConfig,
    probes=(),
) -> tuple[FieldState, list[DiagnosticsRecord]]:
    """Advance ``state`` by ``config.t_end``.

    The step count is ceil(t_end/dt); dt is shrunk so the steps land exactly on t_end.
    Records are taken at the start, every ``record_every`` steps and at the end.
    """
    records = [diagnostics(state, probes)]
    if config.t_end == 0:
        return state, records
    n_steps = max(1, math.ceil(config.t_end / config.dt - 1e-9))
    dt = config.t_end / n_steps
    stepper = Stepper(state.grid, rp, dt)
    phi = state.phi
    tau0 = state.tau
    for i in range(1, n_steps + 1):
        phi = stepper.advance(phi)
        tau = tau0 + i * dt
        stepper.check(phi, tau)
        if i % config.record_every == 0 or i == n_steps:
            records.append(diagnostics(FieldState(state.grid, phi, tau), probes))
    return FieldState(state.grid, phi, tau0 + config.t_end), records


def measured_growth_rate(records, q: float, window: tuple[float, float]) -> float:
    """Least-squares slope of ln|phi_hat(q)| against tau inside ``window``."""
    if not records:
        raise SolverError("no records")
    probes = records[0].probes
    matches = [i for i, p in enumerate(probes) if math.isclose(p, q, rel_tol=1e-9, abs_tol=1e-12)]
    if not matches:
        raise SolverError(f"wavenumber {q} was not probed (probes: {probes})")
    idx = matches[0]
    t1, t2 = window
    taus = np.array([r.tau for r in records])
    if t1 >= t2 or t1 < taus.min() - 1e-12 or t2 > taus.max() + 1e-12:
        raise SolverError(f"window {window} outside recorded range [{taus.min()}, {taus.max()}]")
    sel = [r for r in records if t1 - 1e-12 <= r.tau <= t2 + 1e-12]
    if len(sel) < 4:
        raise SolverError(f"degenerate fit: {len(sel)} samples in window {window}")
    t = np.array([r.tau for r in sel])
    amp = np.array([r.mode_amplitudes[idx] for r in sel])
    if np.any(amp <= 0):
        raise SolverError("mode amplitude vanished inside the fit window")
    slope, _ = np.polyfit(t, np.log(amp), 1)
    return float(slope)


def mass_rate(phi: np.ndarray, grid: Grid, rp: ReducedParams) -> float:
    """Spectral right-hand side of dN/dtau = 2 int(eps rho - rho^2) - 2 int |grad phi|^2."""
    rho = phi.real**2 + phi.imag**2
    spec = np.fft.fftn(phi) / phi.size
    grad2 = float(np.sum(grid.k_squared() * np.abs(spec) ** 2)) * grid.volume
    local = float(np.mean(rp.epsilon * rho - rho * rho)) * grid.volume
    return 2.0 * local - 2.0 * grad2
