"""Exception hierarchy shared by all modules."""


class AtomLaserError(Exception):
    """Base class for every error raised by this package."""


class DegenerateParameterError(AtomLaserError, ValueError):
    """Physical parameters violate a positivity invariant or make a reduction singular."""


class UnknownPresetError(AtomLaserError, KeyError):
    pass


class NonFiniteInputError(AtomLaserError, ValueError):
    pass


class BelowThresholdError(AtomLaserError, ValueError):
    """No homogeneous lasing state exists (epsilon <= 0)."""


class NoCrossingError(AtomLaserError, ValueError):
    """The stability margin keeps a constant sign over the searched Rabi range."""


class SolverError(AtomLaserError, RuntimeError):
    pass


class StabilityGuardError(SolverError):
    """Time step too large for the configured stability guard."""


class BlowUpError(SolverError):
    """Field became non-finite or exceeded the blow-up threshold."""

    def __init__(self, message: str, tau: float):
        super().__init__(message)
        self.tau = tau


class ConfigError(AtomLaserError, ValueError):
    pass
