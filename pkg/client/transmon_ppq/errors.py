"""Error types raised by the simulator.

The command line maps ConfigError to exit code 1 and every other
TransmonPPQError to exit code 2.
"""


class TransmonPPQError(RuntimeError):
    """Base class for all simulator failures."""


class ConfigError(TransmonPPQError):
    """Invalid or unreadable run configuration.

    Args:
        message: Human readable description.
        field_path: Dotted path of the offending field, if known.
    """

    def __init__(self, message: str, field_path: str = ""):
        self.field_path = field_path
        if field_path:
            message = f"{field_path}: {message}"
        super().__init__(message)


class DimensionError(TransmonPPQError, ValueError):
    """Matrix shapes do not fit the requested operation."""


class SymmetryError(TransmonPPQError, ValueError):
    """Matrix expected Hermitian is not Hermitian within tolerance."""


class ParameterError(TransmonPPQError, ValueError):
    """Numerical parameter outside its admissible range."""


class CalibrationRangeError(TransmonPPQError):
    """Requested qubit frequency cannot be reached by tuning the flux."""


class AssemblyError(TransmonPPQError):
    """Subsystem models cannot be combined into a composite model."""


class OptimizationInitError(TransmonPPQError):
    """Every vertex of the initial simplex evaluated to the penalty."""
