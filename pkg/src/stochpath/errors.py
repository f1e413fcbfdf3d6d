"""Exception hierarchy and process exit codes.

Every error raised by this package derives from :class:`StochPathError`
so callers can catch one base type. The CLI maps error families to
distinct exit codes (see ``EXIT_*``).
"""


class StochPathError(Exception):
    """Base class for all stochpath errors."""


class DomainError(StochPathError, ValueError):
    """An argument violates a documented precondition."""


class ConfigurationError(StochPathError):
    """Mutually inconsistent run configuration (e.g. scheme/model mismatch)."""


class DataIoError(StochPathError):
    """Base class for ingestion and serialization failures."""


class CsvSchemaError(DataIoError):
    """A required CSV column is missing."""

    def __init__(self, column: str):
        self.column = column
        super().__init__(f"missing required column {column!r}")


class CsvParseError(DataIoError):
    """A CSV cell could not be parsed."""

    def __init__(self, row: int, column: str, detail: str):
        self.row = row
        self.column = column
        super().__init__(f"row {row}, column {column!r}: {detail}")


class CsvDataError(DataIoError):
    """A parsed CSV row violates a data invariant."""

    def __init__(self, row: int, detail: str):
        self.row = row
        super().__init__(f"row {row}: {detail}")


class EstimationError(StochPathError):
    """Parameter estimation failed on otherwise well-formed data."""


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_IO = 4
