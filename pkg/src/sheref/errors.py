"""Exception hierarchy shared by every module."""


class ShererError(Exception):
    """Base class for all errors raised by this package."""


# ledger / time bookkeeping
class CapExceeded(ShererError, ValueError):
    pass


class NonContiguousTime(ShererError, ValueError):
    pass


class NotPreviouslyActive(ShererError, ValueError):
    pass


# models
class SupportViolation(ShererError, ValueError):
    pass


class MissingHistory(ShererError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# e-value engine
class MissingLr(ShererError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NegativeLr(ShererError, ValueError):
    pass


# detector
class CapViolation(ShererError, ValueError):
    pass


class NonFiniteInput(ShererError, ValueError):
    pass


# boosting
class CeilingReached(ShererError):
    """The boosting search ceiling itself is feasible.

    The certified result (factor equal to the ceiling) is attached as
    ``result`` so callers can either raise the ceiling or accept it.
    """

    def __init__(self, result):
        super().__init__(
            f"boost factor reached the ceiling b_max={result.factor:g}; "
            "the ceiling is itself feasible"
        )
        self.result = result


# metrics
class EmptyTraceList(ShererError, ValueError):
    pass


class MismatchedHorizons(ShererError, ValueError):
    pass


# configuration / streams
class ConfigError(ShererError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class MalformedRecord(ShererError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
