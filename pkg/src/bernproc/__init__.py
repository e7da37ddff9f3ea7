"""Harmonic-oscillator Bernstein processes: kernels, Gaussian laws, samplers, mixtures."""

__version__ = "0.1.0"

from .errors import DomainError, FactorizationError
from .mehler import (
    HarmonicParams,
    SeriesResult,
    log_mehler,
    mehler_closed,
    mehler_series,
    pde_residual,
    semigroup_residual,
)
from .mixtures import (
    MixtureParams,
    kernel_pair_trace,
    mixture_density_closed,
    mixture_density_series,
    mixture_mass,
    mixture_weight,
    signed_measure_total_mass,
)
from .processes import (
    GaussianLaw,
    Kind,
    ProcessSpec,
    TimeGrid,
    covariance_gram,
    covariance_scalar,
    fdd_law,
    mean_function,
    precision_matrix,
)
from .samplers import (
    PathBatch,
    empirical_covariance,
    sample_exact,
    sample_ou_recursion,
    sample_periodic_ou,
)
from .special_functions import gauss_hermite_integrate, hermite_function, hermite_functions

__all__ = [
    "__version__",
    "DomainError",
    "FactorizationError",
    "HarmonicParams",
    "SeriesResult",
    "log_mehler",
    "mehler_closed",
    "mehler_series",
    "pde_residual",
    "semigroup_residual",
    "MixtureParams",
    "kernel_pair_trace",
    "mixture_density_closed",
    "mixture_density_series",
    "mixture_mass",
    "mixture_weight",
    "signed_measure_total_mass",
    "GaussianLaw",
    "Kind",
    "ProcessSpec",
    "TimeGrid",
    "covariance_gram",
    "covariance_scalar",
    "fdd_law",
    "mean_function",
    "precision_matrix",
    "PathBatch",
    "empirical_covariance",
    "sample_exact",
    "sample_ou_recursion",
    "sample_periodic_ou",
    "gauss_hermite_integrate",
    "hermite_function",
    "hermite_functions",
]
