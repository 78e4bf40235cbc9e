"""Exception hierarchy shared across the package."""


class CycleSqlError(Exception):
    """Base class for all package errors."""


class ParseError(CycleSqlError):
    def __init__(self, position: int, message: str):
        super().__init__(f"parse error at {position}: {message}")
        self.position = position
        self.message = message


class UnsupportedSyntax(CycleSqlError):
    """SQL outside the supported SQLite subset (DDL/DML, CTEs, windows, ...)."""


class MalformedCatalog(CycleSqlError):
    """tables.json does not follow the Spider catalog schema."""


class RewriteError(CycleSqlError):
    """A composed provenance query no longer re-parses; internal bug guard."""


class SqlExecutionError(CycleSqlError):
    """Engine-level failure while executing a query."""


class Timeout(CycleSqlError):
    """Query or backend call exceeded its time budget."""


class EmptyProvenance(CycleSqlError):
    """The provenance query returned zero rows; callers fall back to
    operation-level explanation."""


class BackendUnavailable(CycleSqlError):
    """Remote verifier unreachable after retry."""


class DomainError(CycleSqlError):
    """Numeric argument outside its mathematical domain."""


class TaskError(CycleSqlError):
    """No candidate of a translation task could be parsed."""


class MissingGold(CycleSqlError):
    """Evaluation results reference ids absent from the gold set."""
