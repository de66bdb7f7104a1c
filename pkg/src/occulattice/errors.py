"""Exception hierarchy.

Every error carries the name of the module that raised it so the command line
front end can tag messages and choose an exit status.
"""


class OccuLatticeError(Exception):
    """Base class for all library errors."""

    module = "occulattice"
    #: exit status used by the command line (2 validation, 3 numeric)
    exit_code = 3

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


class ValidationError(OccuLatticeError, ValueError):
    exit_code = 2


class NumericError(OccuLatticeError, ArithmeticError):
    exit_code = 3


# walk_model
class DimensionTooLow(ValidationError):
    module = "walk_model"


class AsymmetricStep(ValidationError):
    module = "walk_model"


class BadProbabilityMass(ValidationError):
    module = "walk_model"


class DegenerateLattice(ValidationError):
    module = "walk_model"


# green_fn
class ToleranceUnachievable(NumericError):
    module = "green_fn"


class ZeroOffset(ValidationError):
    module = "green_fn"


# spectral
class NoConvergence(NumericError):
    module = "spectral"


class LambdaNotAboveOne(ValidationError):
    module = "spectral"


# occupation_law
class OriginNotInSet(ValidationError):
    module = "occupation_law"


# montecarlo
class ExcessiveTruncation(NumericError):
    module = "montecarlo"


class InsufficientTailMass(NumericError):
    module = "montecarlo"


class MemoryBudgetExceeded(NumericError):
    module = "montecarlo"


# continuum
class EmptyCover(ValidationError):
    module = "continuum"


class PowerIterationStall(NumericError):
    module = "continuum"


class RootNotBracketed(NumericError):
    module = "continuum"


class OriginSingularity(ValidationError):
    module = "continuum"


class AnisotropicWalk(ValidationError):
    module = "continuum"


# cli
class UnknownCommand(ValidationError):
    module = "cli"


class InvalidConfig(ValidationError):
    module = "cli"


class SuiteFailed(OccuLatticeError):
    module = "cli"
    exit_code = 1
