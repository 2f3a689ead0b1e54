"""Exception hierarchy.

Every error raised on purpose by the package derives from ``EksaiiError`` and
carries the CLI exit code it maps to.
"""


class EksaiiError(Exception):
    exit_code = 4


class ConfigError(EksaiiError):
    """Bad hyperparameters, missing classes in a pool config, unknown ids."""

    exit_code = 2


class DataError(EksaiiError):
    exit_code = 3


class DimensionError(DataError, ValueError):
    pass


class ParseError(DataError):
    pass


class SchemaError(DataError):
    pass


class IntegrityError(DataError):
    """Bundle file is truncated, corrupted or of an unknown format version."""


class ResamplingError(DataError):
    pass


class ContractError(EksaiiError, ValueError):
    """A documented precondition of a pure function was violated."""

    exit_code = 4


class RenderError(EksaiiError):
    exit_code = 2


class DegenerateNode(EksaiiError):
    """Raised when a node holds too few instances to score candidates."""
