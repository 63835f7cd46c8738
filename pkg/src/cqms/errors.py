"""Exception types shared across the engine.

Every error carries an HTTP-ish status so the service and CLI can map
failures without isinstance ladders.
"""
from __future__ import annotations


class CqmsError(Exception):
    """Base class for engine errors."""

    status = 500


class SqlSyntaxError(CqmsError):
    """Query text is malformed beyond placeholder recovery."""

    status = 400

    def __init__(self, position: int, expected: list[str] | tuple[str, ...]):
        self.position = position
        self.expected = list(expected)
        super().__init__(
            "syntax error at offset %d, expected one of: %s"
            % (position, ", ".join(self.expected))
        )


class UnsupportedFeature(CqmsError):
    """Recognized construct outside the supported dialect."""

    status = 400

    def __init__(self, name: str):
        self.name = name
        super().__init__("unsupported construct: %s" % name)


class InvalidWeights(CqmsError):
    status = 400


class InvalidMetaQuery(CqmsError):
    status = 400


class EmptyQuery(CqmsError):
    status = 400


class NotFound(CqmsError):
    status = 404


class Forbidden(CqmsError):
    # only for actions on records the principal can already see
    status = 403


class BindFailure(CqmsError):
    status = 500


class DeletedQuery(NotFound):
    # logically deleted records read as absent
    pass


class DanglingReference(CqmsError):
    status = 400


class NoSchema(CqmsError):
    status = 409


class StoreCorrupt(CqmsError):
    status = 500


class StoreIOError(CqmsError):
    status = 500
