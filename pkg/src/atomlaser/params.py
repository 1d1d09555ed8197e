"""Physical atom-laser parameters and their reduction to CGLE coefficients.

All inputs are SI. The reduction maps the open-condensate model onto

    dphi/dtau = eps*phi + (1 + i c1) lap(phi) - (1 + i c2) |phi|^2 phi

with tau = gamma_c t, lengths in units of ``l0`` and |phi|^2 rescaled by
``amp2_scale``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from scipy.constants import hbar, physical_constants

from .errors import DegenerateParameterError, UnknownPresetError

HBAR = hbar  # CODATA 2018, exact-by-definition since the SI redefinition
ATOMIC_MASS_UNIT = physical_constants["atomic mass constant"][0]

# Isotope masses in u, AME2016 (Wang et al., Chin. Phys. C 41, 030003).
MASS_RB87 = 86.909180527 * ATOMIC_MASS_UNIT
MASS_LI7 = 7.0160034366 * ATOMIC_MASS_UNIT


@dataclass(frozen=True)
class PhysicalParams:
    """SI experimental inputs.

    Attributes:
        gamma_u: escape rate of uncondensed atoms [1/s]
        gamma_c: condensate outcoupling rate [1/s]
        Gamma: local condensed/uncondensed coupling constant [m^3/s]
        R: pump rate density [1/(m^3 s)]
        D_r: thermal-cloud diffusion constant [m^2/s]
        g_over_hbar: interaction constant over hbar [m^3/s], may be negative
        Omega: IR Rabi frequency [1/s]
        V: cavity volume [m^3]
        mass: atomic mass [kg]
    """

    gamma_u: float
    gamma_c: float
    Gamma: float
    R: float
    D_r: float
    g_over_hbar: float
    Omega: float
    V: float
    mass: float

    def validate(self) -> None:
        for name in self.field_names():
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DegenerateParameterError(f"{name} must be finite, got {value!r}")
        for name in ("gamma_u", "gamma_c", "Gamma", "D_r", "V", "mass"):
            if getattr(self, name) <= 0:
                raise DegenerateParameterError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("R", "Omega"):
            if getattr(self, name) < 0:
                raise DegenerateParameterError(f"{name} must be >= 0, got {getattr(self, name)!r}")

    def replace(self, **changes) -> PhysicalParams:
        return dataclasses.replace(self, **changes)

    @staticmethod
    def field_names() -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(PhysicalParams))

    def to_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> PhysicalParams:
        names = cls.field_names()
        unknown = set(data) - set(names)
        if unknown:
            raise KeyError(f"unknown PhysicalParams field(s): {sorted(unknown)}")
        missing = [n for n in names if n not in data]
        if missing:
            raise KeyError(f"missing PhysicalParams field(s): {missing}")
        return cls(**{n: float(data[n]) for n in names})


@dataclass(frozen=True)
class ReducedParams:
    """Dimensionless CGLE coefficients plus the scales that produced them."""

    epsilon: float
    c1: float
    c2: float
    l0: float  # m
    t0: float  # s, equal to 1/gamma_c
    amp2_scale: float  # m^3; dimensionless |phi|^2 = amp2_scale * n_c

    @classmethod
    def dimensionless(cls, epsilon: float, c1: float, c2: float) -> ReducedParams:
        """Coefficients with unit scales, for working directly in CGLE units."""
        return cls(epsilon=epsilon, c1=c1, c2=c2, l0=1.0, t0=1.0, amp2_scale=1.0)


def reduce(p: PhysicalParams) -> ReducedParams:
    p.validate()
    if p.R == 0:
        raise DegenerateParameterError("R = 0: the reduction divides by the pump rate")
    gu2 = p.gamma_u**2
    rg = p.R * p.Gamma
    epsilon = 0.5 * (rg / (p.gamma_u * p.gamma_c) - 1.0)
    c1 = HBAR * gu2 / (p.mass * p.R * p.D_r * p.Gamma)
    c2 = 2.0 * gu2 / (rg * p.Gamma) * (p.Omega * p.V + p.g_over_hbar)
    l0 = math.sqrt(rg * p.D_r / (2.0 * gu2 * p.gamma_c))
    amp2_scale = rg * p.Gamma / (2.0 * gu2 * p.gamma_c)
    return ReducedParams(epsilon, c1, c2, l0, 1.0 / p.gamma_c, amp2_scale)


def c2_slope(p: PhysicalParams) -> float:
    """d c2 / d Omega, in seconds."""
    return 2.0 * p.gamma_u**2 * p.V / (p.R * p.Gamma**2)


def omega_for_c2(p: PhysicalParams, c2_target: float) -> float:
    """Rabi frequency giving ``c2_target``; sign is kept, physical admissibility is the caller's call."""
    if p.V <= 0 or p.R <= 0 or p.Gamma <= 0 or p.gamma_u <= 0:
        raise DegenerateParameterError("omega_for_c2 needs V, R, Gamma, gamma_u > 0")
    return (c2_target * p.R * p.Gamma**2 / (2.0 * p.gamma_u**2) - p.g_over_hbar) / p.V


def g_from_scattering(a: float, mass: float) -> float:
    """Return g/hbar = 4 pi hbar a / m for scattering length ``a`` [m]."""
    if mass <= 0:
        raise DegenerateParameterError(f"mass must be > 0, got {mass!r}")
    return 4.0 * math.pi * HBAR * a / mass


_PRESETS = {
    "rb87": PhysicalParams(
        gamma_u=1500.0,
        gamma_c=50.0,
        Gamma=7.02e-16,
        R=2.13e20,
        D_r=2e-8,
        g_over_hbar=4.8e-17,
        Omega=0.0,
        V=2.5e-16,
        mass=MASS_RB87,
    ),
    "li7": PhysicalParams(
        gamma_u=87.0,
        gamma_c=50.0,
        Gamma=5.4e-17,
        R=1.61e20,
        D_r=2e-8,
        g_over_hbar=-1.61e-16,
        Omega=0.0,
        V=2.5e-16,
        mass=MASS_LI7,
    ),
}


def preset_names() -> list[str]:
    return list(_PRESETS)


def preset(name: str) -> PhysicalParams:
    try:
        return _PRESETS[name]
    except KeyError:
        raise UnknownPresetError(f"unknown preset {name!r}; known: {', '.join(_PRESETS)}") from None
