"""Exception types shared across the package."""


class SchemeError(ValueError):
    """Block geometry request is impossible (alpha out of range or blocks too long)."""


class MomentOrderError(ValueError):
    """A computation asked for a moment order the innovation law does not have."""


class ConsistencyError(RuntimeError):
    """Two exact routes to the same quantity disagree beyond tolerance."""


class PrecisionError(RuntimeError):
    """The configured replicate budget cannot resolve the requested probability."""


class QuadratureError(RuntimeError):
    """Numerical integration failed to converge."""


class ConfigError(ValueError):
    """Experiment configuration failed validation.

    Carries the list of violated constraints so callers can render a
    machine-readable report.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class RegimeWarning(UserWarning):
    """Requested parameters fall outside the regime a result is stated for."""
