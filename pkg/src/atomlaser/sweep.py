"""Stability maps over the (Omega, R) plane."""

from __future__ import annotations

import datetime as _dt
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, cgle
from .errors import AtomLaserError, ConfigError
from .params import PhysicalParams, reduce
from .stability import benjamin_feir

log = logging.getLogger(__name__)

STABLE = 1
UNSTABLE = 0
BELOW_THRESHOLD = -1
FAILED = -2

STATUS_LABELS = {
    STABLE: "stable",
    UNSTABLE: "unstable",
    BELOW_THRESHOLD: "below-threshold",
    FAILED: "failed",
}
LABEL_STATUS = {v: k for k, v in STATUS_LABELS.items()}


@dataclass(frozen=True)
class NumericalSettings:
    horizon: float = 1000.0
    contrast_threshold: float = 0.2
    dt: float = 0.1
    n: int = 256
    length: float = 100.0
    noise_amp: float = 1e-3
    seed: int = 0


@dataclass(frozen=True)
class SweepSpec:
    base: PhysicalParams
    omega_range: tuple[float, float, int]
    r_range: tuple[float, float, int]
    mode: str = "analytic"
    numerical: NumericalSettings = NumericalSettings()
    preset_name: str = ""
    workers: int = 1

    def validate(self) -> None:
        for name, (lo, hi, n) in (("omega_range", self.omega_range), ("r_range", self.r_range)):
            if int(n) != n or n < 1:
                raise ConfigError(f"{name}: need a positive point count, got {n}")
            # lo == hi is allowed: a single-point axis gives a strip
            if n == 1 and lo != hi:
                raise ConfigError(f"{name}: a single point needs lo == hi, got ({lo}, {hi})")
            if not lo <= hi:
                raise ConfigError(f"{name}: need lo <= hi, got ({lo}, {hi})")
        if self.omega_range[0] < 0:
            raise ConfigError("omega_range lower bound must be >= 0")
        if self.r_range[0] <= 0:
            raise ConfigError("r_range must be strictly positive")
        if self.mode not in ("analytic", "numerical"):
            raise ConfigError(f"unknown sweep mode {self.mode!r}")

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi, n = self.omega_range
        rlo, rhi, rn = self.r_range
        return np.linspace(lo, hi, int(n)), np.linspace(rlo, rhi, int(rn))


@dataclass(eq=False)
class StabilityMap:
    """Cell (i, j) is omega_axis[i], r_axis[j]."""

    omega_axis: np.ndarray
    r_axis: np.ndarray
    margin: np.ndarray
    status: np.ndarray
    mode: str = "analytic"
    provenance: dict = field(default_factory=dict)

    @property
    def verdict(self) -> np.ndarray:
        return self.status == STABLE

    @property
    def lasing(self) -> np.ndarray:
        return self.status != BELOW_THRESHOLD

    def labels(self) -> np.ndarray:
        return np.vectorize(STATUS_LABELS.get, otypes=[object])(self.status)


def _provenance(spec: SweepSpec) -> dict:
    return {
        "preset": spec.preset_name or "custom",
        "mode": spec.mode,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "version": __version__,
    }


def analytic_cell(base: PhysicalParams, omega: float, r: float) -> tuple[float, int]:
    rp = reduce(base.replace(Omega=omega, R=r))
    verdict = benjamin_feir(rp.c1, rp.c2)
    if rp.epsilon <= 0:
        return verdict.margin, BELOW_THRESHOLD
    return verdict.margin, STABLE if verdict.stable else UNSTABLE


def analytic_map(spec: SweepSpec) -> StabilityMap:
    spec.validate()
    omegas, rs = spec.axes()
    margin = np.empty((omegas.size, rs.size))
    status = np.empty((omegas.size, rs.size), dtype=int)
    for i, om in enumerate(omegas):
        for j, r in enumerate(rs):
            margin[i, j], status[i, j] = analytic_cell(spec.base, float(om), float(r))
    return StabilityMap(omegas, rs, margin, status, "analytic", _provenance(spec))


def numerical_cell(base: PhysicalParams, omega: float, r: float, settings: NumericalSettings) -> tuple[float, int]:
    """Final modulation contrast and verdict from a CGLE run started at the noisy homogeneous state."""
    rp = reduce(base.replace(Omega=omega, R=r))
    if rp.epsilon <= 0:
        return float("nan"), BELOW_THRESHOLD
    try:
        grid = cgle.Grid(1, settings.n, settings.length)
        cfg = cgle.SolverConfig(
            dt=settings.dt,
            t_end=settings.horizon,
            record_every=10**9,
            seed=settings.seed,
            noise_amp=settings.noise_amp,
        )
        state = cgle.init_state(grid, "homogeneous", rp, cfg)
        final, _ = cgle.run(state, rp, cfg)
    except AtomLaserError as exc:
        log.warning("cell Omega=%g R=%g failed: %s", omega, r, exc)
        return float("nan"), FAILED
    contrast = cgle.modulation_contrast(final.phi)
    return contrast, UNSTABLE if contrast > settings.contrast_threshold else STABLE


def _numerical_task(args):
    return numerical_cell(*args)


def numerical_map(spec: SweepSpec) -> StabilityMap:
    spec.validate()
    omegas, rs = spec.axes()
    tasks = [(spec.base, float(om), float(r), spec.numerical) for om in omegas for r in rs]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_numerical_task, tasks))
    else:
        results = [_numerical_task(t) for t in tasks]
    # executor.map returns in submission order, so index assembly is order-independent
    margin = np.array([m for m, _ in results]).reshape(omegas.size, rs.size)
    status = np.array([s for _, s in results], dtype=int).reshape(omegas.size, rs.size)
    return StabilityMap(omegas, rs, margin, status, "numerical", _provenance(spec))


def build_map(spec: SweepSpec) -> StabilityMap:
    return analytic_map(spec) if spec.mode == "analytic" else numerical_map(spec)
