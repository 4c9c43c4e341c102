"""Exception hierarchy shared by all pipeline modules.

Every error raised by this package derives from CoresegError so callers
can catch toolkit failures without masking unrelated bugs. The CLI maps
each class to a distinct exit status.
"""


class CoresegError(Exception):
    """Base class for all toolkit errors."""


class VolumeFormatError(CoresegError):
    """Malformed volume file, header, payload, or value-kind violation."""


class GridError(CoresegError):
    """Invalid patch grid request: bad shapes, ids, or missing patches."""


class FusionError(CoresegError):
    """Invalid slice-fusion request: empty stack or inconsistent slices."""


class SelectionError(CoresegError):
    """Invalid selection request: bad budget, k_init, or embedding data."""


class MetricsError(CoresegError):
    """Invalid evaluation request: shape mismatch or bad threshold."""


class ReportError(CoresegError):
    """Invalid reporting request: unknown metric or degenerate curve."""


class ConfigError(CoresegError):
    """Unusable configuration: unknown key, bad value, or missing field."""


class OverwriteRefused(CoresegError):
    """Outputs already exist and no force flag was given."""


class InternalError(CoresegError):
    """A violated internal invariant; indicates a bug, not a user error."""
