"""Exception types shared across the package."""


class PhasesepError(Exception):
    """Base class for all package errors."""


class DomainError(PhasesepError):
    """An argument left the open interval (-1, 1) where the potential lives."""


class ParameterError(PhasesepError):
    """A constructor or operation received parameters outside its contract."""


class ConvergenceError(PhasesepError):
    """An iterative solve did not reach its residual tolerance.

    This signals a misconfigured tolerance or iteration budget, never a
    missing root: every solve in this package is a bracketed monotone one.
    """


class BarrierError(PhasesepError):
    """A state that must stay strictly inside (-1, 1) touched a barrier."""


class NormOverflowError(PhasesepError):
    """A noise-family norm evaluated to a non-finite value."""


class ConfigError(PhasesepError):
    """A run configuration failed validation."""


class SchemaVersionError(PhasesepError):
    """A persisted report carries an unsupported schema version."""
