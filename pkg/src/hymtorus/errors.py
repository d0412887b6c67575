"""Exception hierarchy shared by every module."""


class HYMError(Exception):
    """Base class for all errors raised by :mod:`hymtorus`."""


class ContractError(HYMError, ValueError):
    """An input violates the documented precondition of an operation."""


class ShapeError(ContractError):
    """Operands live on different geometries or have incompatible shapes."""


class PositivityError(ContractError):
    """A field that must be pointwise positive definite is not.

    Attributes
    ----------
    index : tuple of int
        Grid index of the worst point.
    lambda_min : float
        Smallest eigenvalue found at that point.
    """

    def __init__(self, message, index=None, lambda_min=None):
        super().__init__(message)
        self.index = index
        self.lambda_min = lambda_min


class SolvabilityError(ContractError):
    """Right-hand side of a Poisson problem is not mean-zero."""

    def __init__(self, message, integral=None):
        super().__init__(message)
        self.integral = integral


class ObstructionError(HYMError):
    """An integral obstruction rules out a solution."""


class BracketError(HYMError):
    """No sign change could be bracketed for a scalar root search."""

    def __init__(self, message, samples=None):
        super().__init__(message)
        self.samples = samples or []

