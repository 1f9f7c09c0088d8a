"""Exception types shared across the package."""


class FisheyeError(Exception):
    """Base class for all fisheyekit errors."""


class DomainError(FisheyeError, ValueError):
    """An angle or radius lies outside the projection model's valid domain."""


class FieldOfViewError(FisheyeError, ValueError):
    """A ray's incidence angle exceeds the configured maximum."""


class ConvergenceError(FisheyeError, RuntimeError):
    """An iterative solve failed to reach its tolerance."""


class ConfigError(FisheyeError, ValueError):
    """Inconsistent or invalid configuration values."""
