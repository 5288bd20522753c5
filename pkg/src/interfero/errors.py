"""Exception hierarchy shared by every module."""


class InterferoError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(InterferoError, ValueError):
    pass


class GridError(InterferoError, ValueError):
    """The working grid cannot represent the requested mode or kernel."""


class SingularOrderError(InterferoError, ValueError):
    """Fractional order too close to a multiple of pi for a kernel realisation."""


class AliasingError(GridError):
    pass


class RepresentationError(InterferoError, TypeError):
    """Operator and operand use incompatible representations."""


class ScheduleMismatch(InterferoError, ValueError):
    pass


class InconsistentCoefficients(InterferoError, ValueError):
    pass


class SolverFailure(InterferoError):
    pass


class RankDeficientError(SolverFailure):
    pass


class CombinatorialBlowup(InterferoError):
    pass


class ConfigError(InterferoError, ValueError):
    pass
