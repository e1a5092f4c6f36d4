"""Exception hierarchy; the CLI maps each family to an exit code."""


class BMNBError(Exception):
    """Base class for all package errors."""


class ConfigError(BMNBError):
    """Invalid experiment configuration (CLI exit code 1)."""


class DataError(BMNBError):
    """Unreadable or schema-violating input data (CLI exit code 2)."""


class ParseError(DataError):
    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SchemaError(DataError):
    pass


class PipelineError(BMNBError):
    """A modelling stage failed (CLI exit code 3)."""

    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
