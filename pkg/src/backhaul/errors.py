"""Exception types shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific type that applies rather than a bare ValueError.
"""


class BackhaulError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(BackhaulError):
    """A parameter bundle violates one of its documented invariants."""


class ConfigError(BackhaulError):
    """An experiment config file is malformed or inconsistent."""


class WarmUpError(BackhaulError):
    """A schedule query was made for a slot still inside the pipeline fill."""


class InfeasibleRoutingError(BackhaulError):
    """No unused in-range relay is available for some route stage."""


class NumericalError(BackhaulError):
    """A solver bracket or residual guarantee failed at runtime."""


class SingularStageError(BackhaulError):
    """A stage matrix is singular where an inverse is required."""
