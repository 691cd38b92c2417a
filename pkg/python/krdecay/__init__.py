"""Decay law of unstable quantum states and the Krolikowski–Rzewuski reduction."""

from .errors import (
    ConfigError,
    DegenerateCaseError,
    DivergenceError,
    DivisionHazardError,
    DomainError,
    GridResolutionWarning,
    IllConditionedFitError,
    KrDecayException,
    KrDecayWarning,
    ModelFileError,
    NoCrossingError,
    NumericError,
    QuadratureError,
    RegularizationWarning,
    SingularAmplitudeError,
    SingularityError,
    ToleranceNotReachedError,
)
from .spectral import (
    ContinuumReservoirDensity,
    InterpolatedDensity,
    PointMassDensity,
    SpectralDensity,
    TruncatedBreitWigner,
    bw_normalization,
    density_from_model,
    density_value,
    load_tabulated,
    tabulated,
)
from .amplitude import (
    AmplitudeSplit,
    SurvivalSample,
    survival_amplitude,
    survival_contour,
    survival_derivative,
    survival_direct,
    survival_probability_curve,
    survival_sample,
)
from .heff1d import (
    AsymptoticFit,
    EffectiveHamiltonianSample,
    PopulationEstimate,
    TransitionTimeResult,
    asymptotic_fit,
    effective_hamiltonian,
    hamiltonian_sweep,
    spike_runs,
    surviving_population,
    tail_exponent,
    tail_exponent_from_curve,
    transition_time,
)
from .subspace import (
    Blocks,
    ContinuumReservoir,
    EigenprojectorSet,
    FiniteLevelModel,
    FlatCoupling,
    KernelSample,
    KernelSeries,
    ParallelPotential,
    SubspaceEffectiveHamiltonian,
    TabulatedCoupling,
    blocks,
    default_eta,
    eigenprojectors,
    kernel,
    kernel_sample,
    kernel_series,
    l_operator,
    loy_hamiltonian,
    sigma,
    subspace_block,
    two_level_terms,
    two_level_v,
    v_parallel_inf,
    v_parallel_t,
    v_parallel_time_average,
    ww_hamiltonian,
)
from .exact import (
    AmplitudeMatrix,
    ComparisonReport,
    ComparisonRow,
    ExactEvolution,
    PropagatorSample,
    amplitude_matrix,
    compare_approximations,
    exact_heff,
    propagator,
    recurrence_time,
    survival_decay_rate,
)
from .modelfile import format_model, load_model, parse_model
from .records import CurveTable, read_csv, write_csv

_VERSION = "0.1.0"


def version() -> str:
    """Library version string."""
    return _VERSION


__version__ = version()

__all__ = [
    # Exceptions and warnings
    "KrDecayException",
    "DomainError",
    "NumericError",
    "QuadratureError",
    "ToleranceNotReachedError",
    "DivergenceError",
    "DivisionHazardError",
    "NoCrossingError",
    "IllConditionedFitError",
    "SingularityError",
    "DegenerateCaseError",
    "SingularAmplitudeError",
    "ConfigError",
    "ModelFileError",
    "KrDecayWarning",
    "GridResolutionWarning",
    "RegularizationWarning",
    # Spectral densities
    "SpectralDensity",
    "TruncatedBreitWigner",
    "PointMassDensity",
    "InterpolatedDensity",
    "ContinuumReservoirDensity",
    "bw_normalization",
    "density_value",
    "density_from_model",
    "tabulated",
    "load_tabulated",
    # Survival amplitude
    "SurvivalSample",
    "AmplitudeSplit",
    "survival_amplitude",
    "survival_derivative",
    "survival_direct",
    "survival_contour",
    "survival_sample",
    "survival_probability_curve",
    # One-level effective Hamiltonian
    "EffectiveHamiltonianSample",
    "TransitionTimeResult",
    "AsymptoticFit",
    "PopulationEstimate",
    "effective_hamiltonian",
    "hamiltonian_sweep",
    "transition_time",
    "asymptotic_fit",
    "tail_exponent",
    "tail_exponent_from_curve",
    "surviving_population",
    "spike_runs",
    # Subspace reduction
    "FiniteLevelModel",
    "ContinuumReservoir",
    "FlatCoupling",
    "TabulatedCoupling",
    "Blocks",
    "EigenprojectorSet",
    "SubspaceEffectiveHamiltonian",
    "ParallelPotential",
    "KernelSample",
    "KernelSeries",
    "blocks",
    "subspace_block",
    "eigenprojectors",
    "default_eta",
    "sigma",
    "v_parallel_t",
    "v_parallel_time_average",
    "v_parallel_inf",
    "two_level_terms",
    "two_level_v",
    "loy_hamiltonian",
    "ww_hamiltonian",
    "kernel",
    "kernel_sample",
    "l_operator",
    "kernel_series",
    # Exact evolution
    "ExactEvolution",
    "PropagatorSample",
    "AmplitudeMatrix",
    "ComparisonRow",
    "ComparisonReport",
    "propagator",
    "amplitude_matrix",
    "exact_heff",
    "recurrence_time",
    "survival_decay_rate",
    "compare_approximations",
    # Files
    "parse_model",
    "load_model",
    "format_model",
    "CurveTable",
    "read_csv",
    "write_csv",
    # Version
    "version",
    "__version__",
]
