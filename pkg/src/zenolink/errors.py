"""Exceptions for numerical failures (CLI exit code 3)."""


class NumericalError(RuntimeError):
    """Base class for instability, resolution and calibration failures."""


class StabilityError(NumericalError, ValueError):
    pass


class ResolutionError(NumericalError, ValueError):
    pass


class CalibrationError(NumericalError):
    pass
