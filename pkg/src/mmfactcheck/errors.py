"""Exception hierarchy shared by every layer of the pipeline."""

from __future__ import annotations


class FactCheckError(Exception):
    """Base class for all errors raised by this package."""


class SchemaViolation(FactCheckError):
    """An agent output (or a typed value) broke its declared contract.

    ``field`` is a dotted path into the offending JSON document, e.g.
    ``validation_result.final_sufficiency_confidence``.
    """

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class CitationOutOfPool(SchemaViolation):
    """A reasoning or explanation output cited an evidence id it was never shown."""


class LinkNotInArticle(SchemaViolation):
    """An extraction output produced a URL that does not occur in the source article."""


class QueryExhausted(FactCheckError):
    """Every generated query duplicated one that was already issued."""


class ProviderError(FactCheckError):
    """Base class for failures of external services."""


class TransportError(ProviderError):
    pass


class ReplayMiss(ProviderError):
    """A replay-strict provider had no fixture for the request."""

    def __init__(self, kind: str, key: str):
        self.kind = kind
        self.key = key
        super().__init__(f"no recorded {kind} fixture for key {key}")


class BudgetExceeded(ProviderError):
    pass


class ProviderUnavailable(ProviderError):
    pass


class ImageDecodeError(ProviderError):
    pass


class StoreIOError(ProviderError):
    pass


class HtmlParseError(FactCheckError):
    pass


class EmptyInput(FactCheckError, ValueError):
    pass


class LengthMismatch(FactCheckError, ValueError):
    pass


class ConfigError(FactCheckError):
    pass
