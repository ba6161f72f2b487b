"""Exception types shared across the package."""


class NonFiniteField(ValueError):
    """A field contains NaN or Inf samples."""


class SingularZeroMode(ValueError):
    """A negative-power homogeneous multiplier met a nonzero mean in strict mode."""


class StepUnstable(RuntimeError):
    """A time step blew up (field norm grew by more than 10x in one step)."""

    def __init__(self, time, message=None):
        self.time = time
        super().__init__(message or f"evolution unstable at t={time:g}")


class InvalidRange(ValueError):
    """A parameter lies outside its admissible interval."""


class ConfigError(ValueError):
    """A run configuration field is missing or invalid."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
