"""Exception hierarchy shared across the package."""


class BoardnetError(Exception):
    """Base class for all package errors."""


class SchemaError(BoardnetError):
    """Input file header or layout does not match the documented schema."""


class DataError(BoardnetError):
    """Input data is unusable beyond row-level skipping."""


class ParameterError(BoardnetError, ValueError):
    """A parameter is outside its documented range."""


class ContractError(BoardnetError):
    """A caller violated an operation precondition."""


class StalenessError(BoardnetError):
    """A pipeline stage input is missing or out of date."""


class UsageError(BoardnetError):
    """Command line invocation error."""
