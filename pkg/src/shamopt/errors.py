"""Exception types shared across the package.

Plain ``ValueError`` is used for bad arguments and bad configuration; the
classes below cover failures that carry extra context or that callers are
expected to branch on.
"""


class ShamoptError(Exception):
    """Base class for package-specific runtime failures."""


class NumericalFailure(ShamoptError):
    """A non-finite value appeared during a solver run.

    Carries the iteration counter and a short description of the offending
    quantity.
    """

    def __init__(self, message, iteration=None, quantity=None):
        super().__init__(message)
        self.iteration = iteration
        self.quantity = quantity


class OracleFailure(ShamoptError):
    """A verification oracle did not converge within its budget."""


class InfeasibleGridError(OracleFailure):
    """The brute-force grid contained no feasible point."""


class DegenerateSampleError(OracleFailure):
    """Every sampled point was feasible; the requested estimate is undefined."""


class NotReadyError(ShamoptError):
    """A running average was requested before any term was accumulated."""
