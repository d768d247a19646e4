"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class DimensionError(ValidationError):
    """Array shapes are inconsistent with the model or operation."""


class StructureError(ValidationError):
    """A model lacks the structure an operation requires (e.g. no penultimate layer)."""


class SchemaError(ValidationError):
    """A data file does not have the expected columns."""


class EmptyDataError(ValidationError):
    """No usable rows remain after cleaning."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""


class AggregationError(RuntimeError):
    """Server aggregation received an unusable update set."""
