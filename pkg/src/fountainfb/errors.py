"""Exception types shared across the package."""


class FountainError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(FountainError, ValueError):
    """A parameter or argument violates a documented precondition."""


class ProtocolError(FountainError):
    """Encoder and decoder state machines have desynchronized."""


class DataCorruptionError(FountainError):
    """Recovered payloads disagree; impossible on a lossless-payload channel."""


class MalformedMessageError(FountainError, ValueError):
    """Feedback bytes cannot be decoded (truncated or unknown tag)."""


class WireEncodeError(FountainError, ValueError):
    """A feedback message does not fit the fixed wire-format field widths."""


class CapExceededError(FountainError, RuntimeError):
    """A session hit its transmission cap before completing."""


class CapacityError(FountainError, RuntimeError):
    """An exact enumeration would exceed the configured size cap."""


class SingularModelError(FountainError, ValueError):
    """A Markov model's fundamental matrix does not exist."""
