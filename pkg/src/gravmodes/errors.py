"""Exception hierarchy shared by all gravmodes modules."""


class GravmodesError(Exception):
    """Base class for all package errors."""


class ConfigurationError(GravmodesError):
    """Invalid grid, packet, or scenario configuration."""


class UsageError(GravmodesError):
    """A function was called with inconsistent or unsupported arguments."""


class DegenerateInputError(GravmodesError):
    """Input is mathematically degenerate (zero norm, singular Gram, ...)."""

    def __init__(self, message: str, offending_value: float | None = None):
        super().__init__(message)
        self.offending_value = offending_value


class StepSizeError(GravmodesError):
    """Time step violates the phase-resolution guard."""

    def __init__(self, message: str, suggested_dt: float):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class NumericalFailure(GravmodesError):
    """Non-finite values appeared during evolution."""

    def __init__(self, message: str, step_index: int | None = None):
        super().__init__(message)
        self.step_index = step_index


class ParseError(ConfigurationError):
    """Scenario config document could not be parsed or validated."""
