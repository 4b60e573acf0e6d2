"""Exception types raised across the package."""


class WexchError(Exception):
    """Base class for all package errors."""


class ZeroMass(WexchError):
    pass


class NonPositiveWeight(WexchError):
    pass


class AlphabetMismatch(WexchError):
    pass


class BadIndex(WexchError):
    pass


class TooLarge(WexchError):
    pass


class NotNormalized(WexchError):
    pass


class UnknownRule(WexchError):
    pass


class WrongAlphabet(WexchError):
    pass


class EmptySubset(WexchError):
    pass


class TooManySubsets(WexchError):
    pass


class EmptyDenominator(WexchError):
    pass


class NoAcceptances(WexchError):
    pass


class SameSymbol(WexchError):
    pass


class NotATree(WexchError):
    pass


class DegenerateRatio(WexchError):
    pass


class UndefinedEdge(WexchError):
    pass


class InconsistentConclusion(WexchError):
    """Raised if a condition report would claim sufficient-holds with necessary-fails."""


class ConfigError(WexchError):
    pass
