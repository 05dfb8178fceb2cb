"""Exception hierarchy.

Errors are split by what the CLI reports: bad physics inputs (levels outside a
band, duplicate sites, missing gaps) versus numerical failures (no
convergence, overflow, quadrature drift).
"""

from __future__ import annotations


class ChiralDecayError(Exception):
    """Base class for all package errors."""


class PhysicsPreconditionError(ChiralDecayError, ValueError):
    """A physical precondition of an operation is violated."""


class NumericalError(ChiralDecayError, ArithmeticError):
    """A numerical kernel failed or lost accuracy."""


class OutOfBand(PhysicsPreconditionError):
    pass


class MultipleRoots(PhysicsPreconditionError):
    pass


class DuplicateSite(PhysicsPreconditionError):
    pass


class NoGap(PhysicsPreconditionError):
    pass


class BoundaryReached(PhysicsPreconditionError):
    pass


class Wraparound(PhysicsPreconditionError):
    pass


class NoCrossing(PhysicsPreconditionError):
    """sigma_max never dropped below the reference level before t_max.

    ``lower_bound`` carries t_max, which bounds the resilience time from below.
    """

    def __init__(self, message: str, lower_bound: float):
        super().__init__(message)
        self.lower_bound = lower_bound


class NonSquare(ChiralDecayError, ValueError):
    pass


class DimensionMismatch(ChiralDecayError, ValueError):
    pass


class TooLarge(ChiralDecayError, ValueError):
    pass


class NoConvergence(NumericalError):
    pass


class Overflow(NumericalError):
    pass


class QuadratureDivergence(NumericalError):
    pass


class NumericalFailure(NumericalError):
    pass


class Truncation(NumericalError):
    pass


class IllConditionedWarning(RuntimeWarning):
    """Eigenvector basis is nearly singular (close to an exceptional point)."""
