"""Exception hierarchy shared by all modules."""


class StabAssocError(ValueError):
    """Base class for invalid input to any stabassoc routine."""


class DimensionError(StabAssocError):
    """Array shapes, index sets or grids do not line up."""


class RegimeError(StabAssocError):
    """An operation was asked of the wrong regime (e.g. max-simulating a signed kernel)."""


class NotMaxAssociableError(RegimeError):
    """A signed kernel failed the pairwise sign condition."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(StabAssocError):
    """A run configuration or kernel-spec file is malformed."""
