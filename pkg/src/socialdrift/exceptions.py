"""Exception types raised across the package."""


class NetworkError(ValueError):
    """Malformed network input (bad weights, duplicate links, out-of-range ids)."""


class ZeroStrengthError(NetworkError):
    """Some node has zero (or vanishing) strength, so its local average is undefined."""


class DisconnectedError(NetworkError):
    """An operation that needs a connected network was given a disconnected one."""


class DegenerateError(ValueError):
    """A statistic is undefined for the input (zero variance, single point fit)."""


class GenerationError(RuntimeError):
    """Network generation failed to produce a usable network within the retry cap."""


class DivergenceError(FloatingPointError):
    """Integration produced non-finite states or weights."""
