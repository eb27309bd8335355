"""
pywsacs evaluates rate-distortion functions of discrete-time Gaussian sources
obtained by sampling a continuous-time wide-sense cyclostationary source.
Synchronous sampling gives a cyclostationary process whose rate follows from
reverse water-filling over its polyphase spectrum; asynchronous sampling is
handled through a sequence of synchronous approximations.  The verify module
checks the bounds the asymptotic result relies on.
"""

from .af_model import AfModel, AutocorrelationModel, TrapezoidalPulse, af_eval, gamma_c
from .asymptotic import (
    GuardPlan,
    SweepResult,
    async_block_rdf,
    distortion_sweep,
    gate_check,
    guard_plan,
    max_delay,
    n_sweep,
    phase_optimize,
    phase_sweep,
    rdf_sync,
)
from .config import ExperimentConfig
from .exceptions import (
    ConfigurationError,
    DomainError,
    NumericalError,
    PrecisionError,
    PreconditionError,
    ResourceError,
    WsacsException,
)
from .sampling import (
    SamplingPlan,
    block_covariance,
    dt_autocorr,
    rational_approx,
    resolve_plan,
)
from .spectrum import build_block_autocorr, eigen_field, psd_at_freq
from .waterfill import finite_block_rdf, solve_theta, test_channel
from .verify import run_suite

try:
    from ._version import __version__
except ImportError:
    __version__ = "0.0.0+unknown"

__all__ = [
    "AfModel",
    "AutocorrelationModel",
    "ConfigurationError",
    "DomainError",
    "ExperimentConfig",
    "GuardPlan",
    "NumericalError",
    "PrecisionError",
    "PreconditionError",
    "ResourceError",
    "SamplingPlan",
    "SweepResult",
    "TrapezoidalPulse",
    "WsacsException",
    "af_eval",
    "async_block_rdf",
    "block_covariance",
    "build_block_autocorr",
    "distortion_sweep",
    "dt_autocorr",
    "eigen_field",
    "finite_block_rdf",
    "gamma_c",
    "gate_check",
    "guard_plan",
    "max_delay",
    "n_sweep",
    "phase_optimize",
    "phase_sweep",
    "psd_at_freq",
    "rational_approx",
    "rdf_sync",
    "resolve_plan",
    "run_suite",
    "solve_theta",
    "test_channel",
]
