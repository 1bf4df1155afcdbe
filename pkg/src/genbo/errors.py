"""Exception hierarchy for the genbo package."""


class GenBOError(Exception):
    """Base class for all errors raised by genbo."""


class UnknownSymbol(GenBOError, ValueError):
    def __init__(self, position: int, symbol: str = ""):
        self.position = position
        self.symbol = symbol
        super().__init__(f"unknown symbol {symbol!r} at position {position}")


class EmptySequence(GenBOError, ValueError):
    pass


class LengthMismatch(GenBOError, ValueError):
    pass


class EmptyData(GenBOError, ValueError):
    pass


class EmptyPairs(GenBOError, ValueError):
    pass


class InvalidFlip(GenBOError, ValueError):
    pass


class NegativeUtility(GenBOError, ValueError):
    pass


class NonFiniteLoss(GenBOError, FloatingPointError):
    pass


class ConstructionFailed(GenBOError, RuntimeError):
    pass


class RejectionBudgetExceeded(GenBOError, RuntimeError):
    pass


class DomainTooLarge(GenBOError, ValueError):
    pass


class AllZeroMass(GenBOError, ValueError):
    pass


class ConfigError(GenBOError, ValueError):
    """Invalid experiment configuration; ``line`` is set when it can be located."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        self.message = message
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class RunFailed(GenBOError, RuntimeError):
    """A run aborted mid-way; ``partial`` holds the rounds completed so far."""

    def __init__(self, message: str, partial=None):
        self.partial = partial
        super().__init__(message)
