"""
Error Types
Exception hierarchy shared by the services and the CLI
"""

from typing import List, Optional


class ArrayModelError(Exception):
    """Base class for every error raised by the resonator-array services."""


class InputError(ArrayModelError, ValueError):
    """Invalid argument: out-of-range site, empty grid, zero vector..."""


class SingularParameterError(ArrayModelError, ValueError):
    """Parameters at which an analytic construction is undefined."""


class SolverError(ArrayModelError):
    """Eigen-decomposition failed to converge."""


class PropagationError(ArrayModelError):
    """Both the spectral propagator and the integrator failed."""


class NormOverflowError(PropagationError):
    """Raw amplitudes became non-finite during time evolution."""


class ResonanceError(ArrayModelError):
    """Drive frequency sits on an eigenvalue of the lossy resolvent."""

    def __init__(self, message: str, closest_eigenvalue: Optional[complex] = None):
        super().__init__(message)
        self.closest_eigenvalue = closest_eigenvalue


class OutputError(ArrayModelError):
    """Artifact could not be written."""


class ConfigError(ArrayModelError):
    """
    Invalid experiment document.
    Carries every validation message, not just the first one.
    """

    def __init__(self, errors: List[str], line: Optional[int] = None, column: Optional[int] = None):
        self.errors = list(errors)
        self.line = line
        self.column = column
        super().__init__("; ".join(self.errors))
