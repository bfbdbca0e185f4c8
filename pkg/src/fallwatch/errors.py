"""Exception types shared across the pipeline, and the CLI exit-code contract."""


class FallwatchError(Exception):
    """Base class for all fallwatch errors."""


class ConfigurationError(FallwatchError):
    """Missing paths, malformed configs, or invalid parameter combinations."""


class DataError(FallwatchError):
    """Unreadable, inconsistent, or contract-violating input data."""


class PurityError(DataError):
    """A training selection contains fall-labelled material."""


class ClipTooShortError(DataError):
    """Clip has fewer frames than the window length; callers record it as a skip."""


class IntegrityError(FallwatchError):
    """A stored artifact (checkpoint, cache entry) fails its integrity check."""


class UndefinedMetric(FallwatchError):
    """The metric has no defined value for the given truths (e.g. single-class)."""


# Stable exit codes for scripting: 0 success, 2 usage, 3 data, 4 integrity.
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTEGRITY = 4
