"""Error ladder for the converters. ConfigError covers bad specs and usage,
DataError covers unreadable or mis-shaped source containers."""


class IngestError(Exception):
    pass


class ConfigError(IngestError):
    pass


class DataError(IngestError):
    pass
