class SemiConcreteError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SemiConcreteError, ValueError):
    """Input documents, configurations or arguments violate a contract."""


class ModelError(ValidationError):
    """A feature model document or model object is malformed."""

    def __init__(self, message, feature=None):
        if feature is not None:
            message = f"{feature}: {message}"
        super().__init__(message)
        self.feature = feature


class SimulationError(SemiConcreteError):
    """Numerical failure inside the simulator."""
