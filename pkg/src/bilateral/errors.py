"""Exception types shared across the package."""


class BilateralError(Exception):
    """Base class for all errors raised by this package."""


class InvalidSpec(BilateralError, ValueError):
    pass


class HorizonExceeded(BilateralError):
    pass


class CapExceeded(BilateralError):
    pass


class WrongSystem(BilateralError, TypeError):
    pass


class MismatchedTraces(BilateralError, ValueError):
    pass


class InfiniteF(BilateralError):
    """The filling scheme sup is +inf at some state."""


class NotACoboundary(BilateralError):
    pass


class OutOfRange(BilateralError, ValueError):
    pass


class BoundExceeded(BilateralError, ValueError):
    pass


class DensityTooLow(BilateralError):
    """Passage-time density hypothesis fails at the requested scale."""


class WitnessNotFound(BilateralError):
    pass


class ResonantFrequency(BilateralError):
    pass


class ConfigError(BilateralError, ValueError):
    pass


class ClampWarning(UserWarning):
    """An observable hit its singularity clamp."""
