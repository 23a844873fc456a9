"""Exception types shared across the package."""


class VibtomoError(Exception):
    """Base class for all package-specific errors."""


class InvalidDimensionError(VibtomoError, ValueError):
    """Requested truncation dimension is too small or not an integer."""


class TruncationUnsafeError(VibtomoError, ValueError):
    """An amplitude exceeds the guard band of the truncated Fock space."""


class InvalidStateError(VibtomoError, ValueError):
    """A density operator violates hermiticity, trace or positivity bounds."""


class InvalidArgumentError(VibtomoError, ValueError):
    """Generic argument-contract violation (e.g. non-unit conditioning vector)."""


class SeriesTruncationError(VibtomoError, ValueError):
    """Number statistics miss too much occupation mass for a series evaluation."""


class RabiNullError(VibtomoError, ValueError):
    """The target Fock index sits on a null of the Rabi spectrum."""


class ScheduleInfeasibleError(VibtomoError, RuntimeError):
    """No probe-cycle schedule meets the leakage budget within the cycle cap."""


class GridMismatchError(VibtomoError, ValueError):
    """Two phase-space fields do not share the same grid."""


class ConfigError(VibtomoError, ValueError):
    """Run configuration is malformed or contains unknown keys."""
