"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """A configuration file or parameter violates an invariant."""


class ConvergenceError(RuntimeError):
    """An iterative numerical scheme failed to meet its tolerance."""


class UnreachableTargetError(RuntimeError):
    """A search target (contour level, saturation condition) cannot be met
    on the given bracket."""
