"""Exception hierarchy shared by all modules.

Config problems and model failures are kept apart so the CLI can map them to
distinct exit codes (1 and 2).
"""


class NopaError(Exception):
    """Base class for every error raised by the package."""


class DomainError(NopaError, ValueError):
    """An input lies outside the validity window of a model."""


class ConfigError(NopaError, ValueError):
    """A configuration file or block failed validation."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ModelError(NopaError):
    """The physical model has no answer for otherwise valid inputs."""


class PhaseMatchingError(ModelError):
    pass


class StabilityError(ModelError):
    def __init__(self, g_product, message=None):
        self.g_product = g_product
        super().__init__(message or f"unstable cavity: g1*g2 = {g_product:.6g} not in (0, 1)")


class ThresholdError(ModelError):
    """Pump power at or above the oscillation threshold."""


class ResonanceSearchError(ModelError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class DegenerateWedgeError(ResonanceSearchError):
    pass


class ConditioningError(ModelError):
    pass
