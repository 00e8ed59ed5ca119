"""Exception types shared across the package."""


class DomainError(ValueError):
    """State outside the admissible phase-space domain (e.g. eccentricity >= 1)."""


class SingularityError(DomainError):
    """Operation undefined at this state (e.g. polar rates at zero eccentricity)."""


class InvalidParameterError(ValueError):
    """Non-finite or out-of-range physical / configuration parameter."""


class DecompositionError(ValueError):
    """Matrix decomposition failed (not symmetric positive definite)."""


class DegenerateInputError(ValueError):
    """Input data carries no usable extent (collinear points, zero range, all-zero weights)."""


class OutOfRangeError(ValueError):
    """Query point outside the covered grid or histogram range."""


class InvalidScalingError(ValueError):
    """Sigma-point scaling parameters produce a non-positive spread."""


class StepBudgetError(RuntimeError):
    """Integrator exceeded its step budget before reaching the end time."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(message)
        self.t_reached = t_reached


class PropagationError(RuntimeError):
    """A propagated state became unusable (non-finite, excessive failures)."""


class LibraryQualityError(RuntimeError):
    """Fitted split library violates its quality invariants."""

    def __init__(self, message: str, l2_distance: float | None = None):
        super().__init__(message)
        self.l2_distance = l2_distance


class GeometryError(RuntimeError):
    """Triangulation or interpolation failed; carries the snapshot time when known."""

    def __init__(self, message: str, snapshot_time: float | None = None):
        super().__init__(message)
        self.snapshot_time = snapshot_time


class ConfigError(ValueError):
    """Scenario configuration file failed to parse or validate."""
