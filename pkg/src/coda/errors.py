"""Exception types shared across the package."""

from __future__ import annotations


class CodaError(Exception):
    """Base class for every error raised by this package."""


class ParseError(CodaError):
    """Source has unbalanced braces/parentheses or an unterminated literal."""


class UnsupportedConstruct(CodaError):
    """Program uses a construct the mini interpreter cannot execute."""


class ProviderUnavailable(CodaError):
    """Embedding provider failed after the configured number of retries."""


class MalformedVectorFile(CodaError):
    """Pretrained vector file violates the word2vec text format."""


class DimensionMismatch(CodaError):
    """Vectors of different dimensions were combined."""


class TooFewClasses(CodaError):
    """A prediction vector with fewer than two classes has no second class."""


class EmptyPool(CodaError):
    """No correctly predicted training input exists for the wanted class."""


class ModelUnavailable(CodaError):
    """Model backend failed after the configured number of retries."""


class MalformedResponse(CodaError):
    """Model backend returned a response violating the prediction contract."""


class MissingClass(CodaError):
    """Training corpus lacks examples for at least one class."""


class DatasetError(CodaError):
    """Dataset file is malformed.  Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
