"""Differential privacy of a graph shift operator behind Gaussian-DP graph-filter releases."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AlphaInfeasible,
    ConfigError,
    DimensionMismatch,
    GraphDPError,
    InvalidCorrelation,
    NotInvertible,
    NoUniformLowerBound,
    SingularCovariance,
    SupportMismatch,
)
from .filters import (  # noqa: E402
    Diffusion,
    FilterBounds,
    Polynomial,
    column_space_basis,
    empirical_instance_bounds,
    filter_bounds,
    filter_matrix,
)
from .graph import (  # noqa: E402
    AdjacentPair,
    Gso,
    enumerate_adjacent,
    generate_erdos_renyi,
    laplacian,
    load_edge_list,
    save_edge_list,
    spectral_norm,
)
from .mechanism import (  # noqa: E402
    CovarianceModel,
    ar1_covariance,
    input_epsilon,
    mse,
    sample_inputs,
)
from .montecarlo import TailEstimate, estimate_tail, log_likelihood_ratio  # noqa: E402
from .privacy import (  # noqa: E402
    OutputGaussian,
    PrivacyAssessment,
    delta_bound,
    epsilon_for_delta,
    kernel_collapse_check,
    kl_divergence,
    output_distribution,
    project_singular,
    renyi_exact,
    spectral_closed_form,
    worst_case_assessment,
)
