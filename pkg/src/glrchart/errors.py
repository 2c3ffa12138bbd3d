"""Exception types shared across the package."""


class GLRChartError(Exception):
    """Base class for all glrchart errors."""


class DomainError(GLRChartError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class InputError(GLRChartError, ValueError):
    """Observation data is invalid (non-finite, wrong sign, unparseable)."""


class CalibrationExhaustedError(GLRChartError, RuntimeError):
    """Too few surviving null streams to estimate the next threshold.

    Raised by threshold calibration when the survivor count drops below
    1/gamma.  The fix is to increase the replication count or reduce the
    calibration horizon.
    """
