"""Exception and warning types shared across the package."""


class SgsimError(Exception):
    """Base class for all package errors."""


class ConfigError(SgsimError):
    """Invalid run configuration.

    ``code`` is one of ``E_PARSE``, ``E_UNKNOWN_KEY``, ``E_RANGE``.
    """

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


class EngineError(SgsimError):
    """A simulation engine failed (non-exiting particles, bad state, ...)."""


class ChebyshevConvergenceError(SgsimError):
    """Polynomial expansion failed to converge within the term budget."""


class GridResolutionError(SgsimError):
    """Grid too coarse to represent the quadratic potential at all."""


class GridResolutionWarning(UserWarning):
    """Grid coarser than the trusted-resolution criterion."""


class EdgeLeakWarning(UserWarning):
    """More than the allowed norm fraction reached the grid boundary."""
