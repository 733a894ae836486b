"""Exception hierarchy shared by all hawkeslab modules.

The CLI maps these onto distinct exit codes, so raise the most specific
class available.
"""


class HawkesError(Exception):
    """Base class for all package errors."""


class DomainError(HawkesError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class KernelConstructionError(HawkesError, ValueError):
    """Kernel parameters produce an invalid kernel (negativity, bad scales)."""


class CriticalityError(HawkesError):
    """Stationary quantity requested for a critical or supercritical process."""


class ExplosionError(HawkesError):
    """Simulated intensity ran away; the event-count cap was exceeded."""


class ProfileError(HawkesError, ValueError):
    """Intraday profile is unusable (empty, zero or negative bins)."""


class DataError(HawkesError, ValueError):
    """Input event data violates a structural requirement."""


class ConfigError(HawkesError, ValueError):
    """A run configuration is inconsistent or contains unknown keys."""


class InversionError(HawkesError):
    """Spectral kernel inversion failed (non-positive spectrum)."""


class NumericalError(HawkesError):
    """A computation produced non-finite or otherwise unusable values."""
