"""Exception types shared across the package."""


class PovmQuadError(Exception):
    """Base class for all errors raised by povmquad."""


class DomainError(PovmQuadError):
    """An argument lies outside the mathematical domain of the operation."""


class ZeroVector(PovmQuadError):
    """A vector of near-zero norm cannot define a direction."""


class ConvergenceError(PovmQuadError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class WeightError(PovmQuadError):
    """A quadrature weight is non-positive where positivity is required."""


class ParseError(PovmQuadError):
    """A point-set or POVM file is malformed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicatePoint(PovmQuadError):
    """Two points of a point set coincide within the merge threshold."""


class InsufficientStrength(PovmQuadError):
    """A quadrature's certified exactness order is below the required order."""

    def __init__(self, found, required):
        super().__init__(
            f"quadrature strength {found} is below the required order {required}"
        )
        self.found = found
        self.required = required


class CapExceeded(PovmQuadError):
    """A matrix-level check was requested above its configured size cap."""


class MissingCount(PovmQuadError):
    """No element count was supplied for a required spin subspace."""


class NotNormalized(PovmQuadError):
    """Outcome probabilities do not sum to one: the POVM is invalid."""

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction
