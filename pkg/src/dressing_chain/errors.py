"""Exception hierarchy shared by every module of the package."""


class DressingChainError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class DegenerateLattice(DressingChainError):
    """Vanishing discriminant: the period lattice collapses."""

    exit_code = 2

    def __init__(self, message, discriminant=None):
        super().__init__(message)
        self.discriminant = discriminant


class ConvergenceFailure(DressingChainError):
    exit_code = 3


class ResidualFailure(DressingChainError):
    exit_code = 4


class EvenPeriod(DressingChainError):
    exit_code = 5


class PoleProximity(DressingChainError, ArithmeticError):
    """Argument lies within the pole-exclusion radius of a lattice point."""


class RangeOverflow(DressingChainError, OverflowError):
    pass


class OffCurveInitialData(DressingChainError, ValueError):
    pass


class SingularReconstruction(DressingChainError, ArithmeticError):
    pass


class ImmediateBlowup(DressingChainError):
    pass
