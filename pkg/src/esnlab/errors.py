"""Exception types raised across esnlab."""


class EsnError(Exception):
    """Base class for all esnlab errors."""


class ConfigError(EsnError, ValueError):
    pass


class DegenerateReservoir(EsnError):
    """Sampled reservoir has (numerically) zero spectral radius."""


class NonFiniteState(EsnError, FloatingPointError):
    """Reservoir state or output became inf/nan, i.e. the run diverged."""


class DimensionMismatch(EsnError, ValueError):
    pass


class WashoutTooLarge(EsnError, ValueError):
    pass


class SingularSystem(EsnError, ArithmeticError):
    pass


class FreeRunWithoutFeedback(EsnError):
    pass


class EmptyGroup(EsnError, ValueError):
    pass


class LengthTooShort(EsnError, ValueError):
    pass


class MalformedRecord(EsnError, ValueError):
    pass


class UnknownLabel(EsnError, ValueError):
    pass


class InvalidFractions(EsnError, ValueError):
    pass


class EmptyInput(EsnError, ValueError):
    pass


class ZeroVariance(EsnError, ValueError):
    pass


class SingleClassOnly(EsnError, ValueError):
    pass


class AllSeedsFailed(EsnError):
    pass


class TooFewValues(EsnError, ValueError):
    pass


class NonPositiveTime(EsnError, ValueError):
    pass


class IoFailure(EsnError, OSError):
    pass


class EchoStateWarning(UserWarning):
    """Configuration is unlikely to have the echo state property."""
