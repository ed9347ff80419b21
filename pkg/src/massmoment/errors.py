"""Exception hierarchy."""


class MassMomentError(Exception):
    """Base class for all errors raised by massmoment."""


class DomainError(MassMomentError, ValueError):
    """A time value lies outside the motion's time domain."""


class SingularMotionError(MassMomentError, ArithmeticError):
    """The deformation gradient is (numerically) non-invertible."""


class EvaluationError(MassMomentError, RuntimeError):
    """A user-supplied map, field or expression failed to evaluate."""


class GeometryError(MassMomentError, ValueError):
    """Degenerate or inconsistent shape description."""


class ScenarioError(MassMomentError, ValueError):
    """Invalid scenario document.

    ``path`` locates the offending entry (JSON pointer style) when known.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
