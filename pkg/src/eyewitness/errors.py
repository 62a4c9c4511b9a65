"""Exception hierarchy shared by all modules."""


class EyeWitnessError(Exception):
    """Base class for every error raised by the package."""


class TruncationError(EyeWitnessError):
    """A truncated Fock space lost more probability than the tail tolerance allows."""


class DimensionError(EyeWitnessError):
    """Operands live on incompatible or insufficient truncated spaces."""


class CalibrationError(EyeWitnessError):
    """A calibration amplitude could not be found or fails its side conditions."""


class DegenerateBoundError(EyeWitnessError):
    """A probability bound has a vanishing denominator."""


class PostSelectionError(EyeWitnessError):
    """No Monte Carlo event survived heralding."""


class ConfigError(EyeWitnessError):
    """Invalid run configuration."""
