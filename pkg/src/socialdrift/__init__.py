"""Social diffusion and global drift on symmetric weighted networks."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    DegenerateError,
    DisconnectedError,
    DivergenceError,
    GenerationError,
    NetworkError,
    ZeroStrengthError,
)
from .netcore import Network, is_connected, local_average, read_edgelist, validate, write_edgelist  # noqa: E402
from .netgen import GenSpec, RewireSpec, fit_scaling, generate, strength_assortativity, xbs_rewire  # noqa: E402
from .diffusion import (  # noqa: E402
    DiffusionParams,
    Trajectory,
    instantaneous_drift,
    integrate,
    measure_decay_rate,
    predict_asymptotic_mean,
    predict_net_gain,
    physical_derivative,
    reduced_model,
    social_derivative,
    strength_state_product,
    u_vector,
    w_vector,
)
from .adaptive import AdaptiveParams, integrate_adaptive, strength_state_correlation, weight_derivative  # noqa: E402
