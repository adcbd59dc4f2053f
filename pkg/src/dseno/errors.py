"""Error taxonomy shared across the library and the CLI.

Exit-code mapping used by the CLI: ConfigError -> 1, DataError -> 2,
NumericError -> 3. Anything else is a bug and propagates.
"""


class DsenoError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ConfigError(DsenoError):
    """Invalid configuration: bad shapes, unknown keys, unknown model names."""

    exit_code = 1


class DataError(DsenoError):
    """Dataset or file-format problem: missing files, bad magic, dim mismatch."""

    exit_code = 2


class NumericError(DsenoError):
    """Non-finite values or divergence during compute."""

    exit_code = 3
