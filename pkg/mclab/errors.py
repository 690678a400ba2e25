"""Exception hierarchy shared by every mclab module."""


class LabError(Exception):
    """Base class for all lab errors."""


class DimensionError(LabError, ValueError):
    """Operands have incompatible shapes."""


class PreconditionError(LabError, ValueError):
    """A numeric precondition of an operation does not hold."""


class EnumerationLimitError(LabError):
    """An exact enumeration was requested beyond its size limit."""

    def __init__(self, operation: str, size: int, limit: int):
        self.operation = operation
        self.size = size
        self.limit = limit
        super().__init__(f"{operation}: dimension {size} exceeds the enumeration limit {limit}")


class InfeasibleError(LabError):
    """The constraint set of a completion problem is empty."""


class QuadratureError(LabError):
    """Dyadic quadrature did not converge at the maximum depth."""

    def __init__(self, depth: int, residual: float, tolerance: float):
        self.depth = depth
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"quadrature did not converge at depth {depth}: "
            f"residual {residual:.3e} > tolerance {tolerance:.1e}"
        )


class FormatError(LabError):
    """A text file does not follow its declared format."""

    def __init__(self, path: str, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")
