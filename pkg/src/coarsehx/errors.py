"""Exception hierarchy.

``ConstraintError`` subclasses signal that the input or the requested
computation violates a documented contract (the CLI maps them to exit
code 2); anything else escaping the pipeline is an internal error.
"""


class CoarseError(Exception):
    """Base class for all package errors."""


class ConstraintError(CoarseError):
    """A documented precondition or mathematical constraint failed."""


# space
class IdOutOfRange(ConstraintError, IndexError):
    pass


class EmptySubspace(ConstraintError):
    pass


class SpecError(ConstraintError):
    pass


# cover
class UnsupportedSpace(ConstraintError):
    pass


class NotAntiCech(ConstraintError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class NotARefinement(ConstraintError):
    def __init__(self, message, member=None):
        super().__init__(message)
        self.member = member


# complex
class BudgetExceeded(ConstraintError):
    def __init__(self, message, dimension=None):
        super().__init__(message)
        self.dimension = dimension


class NotSimplicial(CoarseError):
    pass


# homology
class InvalidComplex(ConstraintError):
    pass


class BrokenChainMap(CoarseError):
    pass


# limit
class StageOutOfRange(ConstraintError, IndexError):
    pass


class HorizonTooSmall(ConstraintError):
    pass


class BadClass(ConstraintError):
    pass


# coarse
class EmptyComplement(ConstraintError):
    pass


class OracleBudget(ConstraintError):
    pass


class UnsupportedScenario(ConstraintError):
    pass


# cli
class ConfigError(ConstraintError):
    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class IoError(ConfigError):
    pass
