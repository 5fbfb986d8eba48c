"""Hawkes self-exciting point processes, end to end.

Intensity evaluation and closed-form compensators, event simulation
(thinning and the linear-time exponential decomposition), constrained
maximum-likelihood estimation, and closed-form prediction of expected
cascade sizes, specialized for marked retweet cascades but usable for any
univariate Hawkes process.
"""

from .cascade_io import (
    CascadeFormatError,
    CascadeValidationError,
    parse_cascade,
    write_events,
    write_intensity_trace,
)
from .inference import (
    ExponentialHawkesParams,
    FitConfig,
    FitResult,
    StartRecord,
    fit_mle,
    gradient_marked_powerlaw,
    log_likelihood,
    log_likelihood_exponential_recursive,
    log_likelihood_marked_powerlaw,
)
from .kernels import (
    DivergentMarkMomentError,
    ExponentialKernel,
    KernelSpec,
    MarkDistribution,
    MarkedExponentialKernel,
    MarkedPowerLawKernel,
    ParameterError,
    PowerLawKernel,
    branching_factor,
    marked_branching_factor,
)
from .poisson import ExponentialLaw, MemorylessnessCheck, memorylessness_check
from .prediction import (
    ContinuationResult,
    PredictionReport,
    Regime,
    SupercriticalError,
    cluster_size_unmarked,
    expected_direct_children,
    simulate_continuations,
    total_cascade_size,
)
from .process import (
    BackgroundSpec,
    ConstantBackground,
    Event,
    EventSequence,
    ExponentialDecayBackground,
    HawkesModel,
    ZeroBackground,
    compensator,
    counting_process,
    intensity_at,
    intensity_right_limit,
)
from .simulation import (
    FixedMarks,
    Horizon,
    MarkSource,
    MaxEvents,
    ParetoMarks,
    SimulatedSequence,
    SimulationConfig,
    StallError,
    StopRule,
    UnitMarks,
    sample_poisson_interarrival,
    simulate_cluster,
    simulate_exp_decomposition,
    simulate_thinning,
)

__version__ = "0.1.0"

__all__ = [
    "BackgroundSpec",
    "CascadeFormatError",
    "CascadeValidationError",
    "ConstantBackground",
    "ContinuationResult",
    "DivergentMarkMomentError",
    "Event",
    "EventSequence",
    "ExponentialDecayBackground",
    "ExponentialHawkesParams",
    "ExponentialKernel",
    "ExponentialLaw",
    "FitConfig",
    "FitResult",
    "FixedMarks",
    "HawkesModel",
    "Horizon",
    "KernelSpec",
    "MarkDistribution",
    "MarkSource",
    "MarkedExponentialKernel",
    "MarkedPowerLawKernel",
    "MaxEvents",
    "MemorylessnessCheck",
    "ParameterError",
    "ParetoMarks",
    "PowerLawKernel",
    "PredictionReport",
    "Regime",
    "SimulatedSequence",
    "SimulationConfig",
    "StallError",
    "StartRecord",
    "StopRule",
    "SupercriticalError",
    "UnitMarks",
    "ZeroBackground",
    "branching_factor",
    "cluster_size_unmarked",
    "compensator",
    "counting_process",
    "expected_direct_children",
    "fit_mle",
    "gradient_marked_powerlaw",
    "intensity_at",
    "intensity_right_limit",
    "log_likelihood",
    "log_likelihood_exponential_recursive",
    "log_likelihood_marked_powerlaw",
    "marked_branching_factor",
    "memorylessness_check",
    "parse_cascade",
    "sample_poisson_interarrival",
    "simulate_cluster",
    "simulate_continuations",
    "simulate_exp_decomposition",
    "simulate_thinning",
    "total_cascade_size",
    "write_events",
    "write_intensity_trace",
]
