"""Exception hierarchy.  Every error raised on purpose derives from
:class:`RelEntropyError` so callers can catch the whole family."""


class RelEntropyError(Exception):
    pass


class NonHermitian(RelEntropyError, ValueError):
    pass


class NotPositive(RelEntropyError, ValueError):
    pass


class NoConvergence(RelEntropyError, ArithmeticError):
    pass


class ZeroOperator(RelEntropyError, ValueError):
    pass


class DegeneratePolar(RelEntropyError, ValueError):
    pass


class DimensionMismatch(RelEntropyError, ValueError):
    pass


class NegativeInput(RelEntropyError, ValueError):
    pass


class BothZero(RelEntropyError, ValueError):
    pass


class NonCommuting(RelEntropyError, ValueError):
    pass


class ZeroSigma(RelEntropyError, ValueError):
    pass


class MTooSmall(RelEntropyError, ValueError):
    pass


class ShapeMismatch(RelEntropyError, ValueError):
    pass


class NotAnOperation(RelEntropyError, ValueError):
    pass


class NotAChannel(RelEntropyError, ValueError):
    pass


class NotAContraction(RelEntropyError, ValueError):
    pass


class ZeroLimit(RelEntropyError, ValueError):
    pass


class BlockOverflow(RelEntropyError, ValueError):
    pass


class EnergyTooSmall(RelEntropyError, ValueError):
    pass


class InvalidWeights(RelEntropyError, ValueError):
    pass


class ImagesNotConverging(RelEntropyError):
    """Images of the input sequences under the maps do not settle; the
    partially filled report is attached as ``report``."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MalformedDocument(RelEntropyError, ValueError):
    pass


class ConfigInvalid(RelEntropyError, ValueError):
    pass


class UnknownCommand(RelEntropyError, KeyError):
    pass
