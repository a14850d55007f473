"""Exception types raised across the package."""


class G2FlowError(Exception):
    """Base class for all package errors."""


class NotPositive(G2FlowError, ValueError):
    """A 3-form left the positive cone (its bilinear density is not definite)."""

    def __init__(self, message, site=None, margin=None):
        super().__init__(message)
        self.site = site
        self.margin = margin


class LeftPositiveCone(NotPositive):
    """Positivity was lost during a time step."""


class DegreeOutOfRange(G2FlowError, ValueError):
    pass


class AxisTooSmall(G2FlowError, ValueError):
    pass


class NotClosed(G2FlowError, ValueError):
    pass


class InsufficientData(G2FlowError, ValueError):
    pass


class NotMonotone(G2FlowError, ValueError):
    pass


class ScaleCollapse(G2FlowError, ValueError):
    pass


class ConfigInvalid(G2FlowError, ValueError):
    pass


class SpecMismatch(G2FlowError, ValueError):
    pass


class SnapshotError(G2FlowError, OSError):
    pass
