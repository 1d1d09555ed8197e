"""Benjamin-Feir criterion and modulational dispersion of the homogeneous CGLE state."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import (
    AtomLaserError,
    BelowThresholdError,
    DegenerateParameterError,
    NoCrossingError,
    NonFiniteInputError,
)
from .params import PhysicalParams, c2_slope, omega_for_c2, reduce

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class StabilityVerdict:
    c1: float
    c2: float
    margin: float
    stable: bool

    @property
    def label(self) -> str:
        return "stable" if self.stable else "unstable"

    @property
    def criterion_lhs(self) -> float:
        """c1 * (-c2); stable when this is < 1."""
        return self.c1 * (-self.c2)

    def to_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "margin": self.margin, "stable": self.stable}


@dataclass(frozen=True)
class DispersionPoint:
    q: float
    lambda_max: float


def benjamin_feir(c1: float, c2: float) -> StabilityVerdict:
    if not (math.isfinite(c1) and math.isfinite(c2)):
        raise NonFiniteInputError(f"c1, c2 must be finite, got ({c1!r}, {c2!r})")
    margin = 1.0 + c1 * c2
    # margin == 0 is marginal and counted on the unstable side
    return StabilityVerdict(c1=c1, c2=c2, margin=margin, stable=margin > 0)


def _require_lasing(epsilon: float) -> None:
    if not epsilon > 0:
        raise BelowThresholdError(f"epsilon = {epsilon!r}: no homogeneous lasing state")


def dispersion_matrix(epsilon: float, c1: float, c2: float, q: float) -> np.ndarray:
    """Linearization about phi0 = sqrt(eps) exp(-i c2 eps tau) for perturbations (a e^{iqx}, conj(b) e^{-iqx})."""
    _require_lasing(epsilon)
    k2 = q * q
    return np.array(
        [
            [-epsilon * (1 + 1j * c2) - (1 + 1j * c1) * k2, -epsilon * (1 + 1j * c2)],
            [-epsilon * (1 - 1j * c2), -epsilon * (1 - 1j * c2) - (1 - 1j * c1) * k2],
        ]
    )


def max_growth_rate(epsilon: float, c1: float, c2: float, q):
    """Largest real part of the dispersion-matrix eigenvalues; vectorizes over ``q``.

    The trace is -2(eps + q^2) and the determinant q^2 [2 eps (1 + c1 c2) + (1 + c1^2) q^2]
    are both real, so the eigenvalues are -(eps + q^2) +/- sqrt(disc) with real ``disc``.
    """
    _require_lasing(epsilon)
    k2 = np.square(np.asarray(q, dtype=float))
    half_trace = -(epsilon + k2)
    det = k2 * (2.0 * epsilon * (1.0 + c1 * c2) + (1.0 + c1 * c1) * k2)
    disc = half_trace * half_trace - det
    # complex pair: both eigenvalues share real part half_trace
    root = np.sqrt(np.maximum(disc, 0.0))
    out = half_trace + root
    return float(out) if out.ndim == 0 else out


def dispersion_curve(epsilon: float, c1: float, c2: float, qs) -> list[DispersionPoint]:
    lam = np.atleast_1d(max_growth_rate(epsilon, c1, c2, np.asarray(qs, dtype=float)))
    return [DispersionPoint(float(q), float(l)) for q, l in zip(np.atleast_1d(qs), lam)]


def _golden_max(f, a: float, b: float, tol: float) -> float:
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def most_unstable_mode(
    epsilon: float,
    c1: float,
    c2: float,
    q_max: float | None = None,
    n_scan: int = 400,
    tol: float = 1e-7,
) -> tuple[float, float]:
    """Return ``(q_star, lambda_star)``; ``(0.0, 0.0)`` when no wavenumber grows."""
    _require_lasing(epsilon)
    if q_max is None:
        q_max = 3.0 * math.sqrt(epsilon)
    qs = np.linspace(0.0, q_max, max(n_scan, 200) + 1)[1:]
    lam = max_growth_rate(epsilon, c1, c2, qs)
    i = int(np.argmax(lam))
    if lam[i] <= 0:
        return 0.0, 0.0
    dq = qs[1] - qs[0]
    lo, hi = max(qs[i] - dq, 0.0), min(qs[i] + dq, q_max)
    q_star = _golden_max(lambda q: max_growth_rate(epsilon, c1, c2, q), lo, hi, tol)
    return q_star, max_growth_rate(epsilon, c1, c2, q_star)


def bf_margin(p: PhysicalParams) -> float:
    rp = reduce(p)
    return 1.0 + rp.c1 * rp.c2


def rabi_threshold_closed_form(p: PhysicalParams) -> float:
    """Omega where 1 + c1 c2(Omega) = 0; c2 is affine in Omega so this is exact."""
    rp = reduce(p.replace(Omega=0.0))
    if rp.c1 <= 0:
        raise DegenerateParameterError("c1 must be > 0")
    return omega_for_c2(p, -1.0 / rp.c1)


def rabi_threshold(p: PhysicalParams, omega_hi: float | None = None, xtol: float = 1e-8) -> float:
    """Locate the Rabi frequency at which the Benjamin-Feir margin changes sign.

    Bisects the margin on ``[0, omega_hi]`` and cross-checks against the closed form.
    ``omega_hi`` defaults to the first power of two (from 1/s) where the margin is positive.
    Raises NoCrossingError when the margin has the same sign at both ends.
    """
    base = p.replace(Omega=0.0)
    rp0 = reduce(base)
    if rp0.c1 <= 0:
        raise DegenerateParameterError("c1 must be > 0")

    def margin(omega: float) -> float:
        return bf_margin(base.replace(Omega=omega))

    m0 = margin(0.0)
    if m0 > 0:
        raise NoCrossingError(f"no BF crossing: margin {m0:.6g} > 0 already at Omega = 0")
    if omega_hi is None:
        omega_hi = 1.0
        while margin(omega_hi) <= 0:
            omega_hi *= 2.0
            if omega_hi > 1e12:
                raise NoCrossingError("no BF crossing below Omega = 1e12 1/s")
    elif margin(omega_hi) <= 0:
        raise NoCrossingError(f"no BF crossing on [0, {omega_hi}] 1/s")
    if m0 == 0:
        omega_star = 0.0
    else:
        omega_star = optimize.bisect(margin, 0.0, omega_hi, xtol=xtol)
    closed = rabi_threshold_closed_form(p)
    if abs(closed - omega_star) > 1e-4:
        raise AtomLaserError(f"bisection {omega_star} and closed form {closed} disagree")
    return omega_star


__all__ = [
    "StabilityVerdict",
    "DispersionPoint",
    "benjamin_feir",
    "dispersion_matrix",
    "max_growth_rate",
    "dispersion_curve",
    "most_unstable_mode",
    "bf_margin",
    "rabi_threshold",
    "rabi_threshold_closed_form",
    "c2_slope",
]
