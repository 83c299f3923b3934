"""Rate distortion functions of sampled Gaussian sources.

The package computes the best achievable rate for reconstructing a jointly
Gaussian vector (or a stationary Gaussian field on [0, 1]) under sum MSE when
the encoder only sees a fixed subset of components, covering the known-law
curve, its universal counterparts for parametric families, sampling-set
optimization, and Monte Carlo checks of the matching two-step code.
"""

from .errors import (
    BudgetOutOfRange,
    CodebookTooLarge,
    ConfigParse,
    DimensionMismatch,
    DomainError,
    EigenFailure,
    EmptyAtom,
    EmptyGrid,
    GridTooLarge,
    IndexOutOfRange,
    InfeasibleDistortion,
    NoPrior,
    NotPositiveDefinite,
    NotSquare,
    NotSymmetric,
    NumericalError,
    QuadratureUnderResolved,
    SingularSigmaA,
    SrdfKitError,
    TooManySubsets,
    TrainingDiverged,
    UnsupportedFamily,
    ValidationError,
)
from .field import (
    FieldModel,
    FieldSamplingSet,
    GaussMarkovKernel,
    PlacementResult,
    TabulatedKernel,
    field_distortion_rate,
    field_gram,
    field_max_distortion,
    field_min_distortion,
    field_spectrum,
    field_srdf,
    field_weight_matrix,
    gm_min_distortion_pinned,
    gm_min_distortion_single,
    gm_segment_explained,
    optimize_placement,
)
from .model import (
    BlockPartition,
    CovarianceModel,
    SamplingSet,
    as_sampling_set,
    partition,
    validate_covariance,
)
from .setopt import SetSearchResult, SubsetRow, best_fixed_set
from .simulate import (
    MeanCI,
    SimConfig,
    SimReport,
    TrainedCode,
    build_code,
    ml_cov_estimate,
    mmse_lift,
    sample_gmms,
    two_step_code,
    universal_encode,
    universal_two_step,
)
from .srdf import (
    SrdfPoint,
    WaterfillSolution,
    congruent_spectrum,
    correlation_model,
    distortion_rate,
    eval_da,
    max_distortion,
    min_distortion,
    single_site_min_distortion,
    single_site_srdf,
    srdf,
    srdf_eigenvalues,
    waterfill,
    waterfill_inverse,
    weight_matrix,
)
from .universal import (
    AmbiguityAtom,
    AmbiguityPartition,
    ParamFamily,
    UsrdfPoint,
    affine_family,
    atom_distortion_at_rate,
    bayes_atom_data,
    bayes_usrdf,
    fixed_var_corr_family,
    nonbayes_usrdf,
    project_family,
    rho_bayes,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguityAtom",
    "AmbiguityPartition",
    "BlockPartition",
    "BudgetOutOfRange",
    "CodebookTooLarge",
    "ConfigParse",
    "CovarianceModel",
    "DimensionMismatch",
    "DomainError",
    "EigenFailure",
    "EmptyAtom",
    "EmptyGrid",
    "FieldModel",
    "FieldSamplingSet",
    "GaussMarkovKernel",
    "GridTooLarge",
    "IndexOutOfRange",
    "InfeasibleDistortion",
    "MeanCI",
    "NoPrior",
    "NotPositiveDefinite",
    "NotSquare",
    "NotSymmetric",
    "NumericalError",
    "ParamFamily",
    "PlacementResult",
    "QuadratureUnderResolved",
    "SamplingSet",
    "SetSearchResult",
    "SimConfig",
    "SimReport",
    "SingularSigmaA",
    "SrdfKitError",
    "SrdfPoint",
    "SubsetRow",
    "TabulatedKernel",
    "TooManySubsets",
    "TrainedCode",
    "TrainingDiverged",
    "UnsupportedFamily",
    "UsrdfPoint",
    "ValidationError",
    "WaterfillSolution",
    "affine_family",
    "as_sampling_set",
    "atom_distortion_at_rate",
    "bayes_atom_data",
    "bayes_usrdf",
    "best_fixed_set",
    "build_code",
    "congruent_spectrum",
    "correlation_model",
    "distortion_rate",
    "eval_da",
    "field_distortion_rate",
    "field_gram",
    "field_max_distortion",
    "field_min_distortion",
    "field_spectrum",
    "field_srdf",
    "field_weight_matrix",
    "fixed_var_corr_family",
    "gm_min_distortion_pinned",
    "gm_min_distortion_single",
    "gm_segment_explained",
    "max_distortion",
    "min_distortion",
    "ml_cov_estimate",
    "mmse_lift",
    "nonbayes_usrdf",
    "optimize_placement",
    "partition",
    "project_family",
    "rho_bayes",
    "sample_gmms",
    "single_site_min_distortion",
    "single_site_srdf",
    "srdf",
    "srdf_eigenvalues",
    "two_step_code",
    "universal_encode",
    "universal_two_step",
    "validate_covariance",
    "waterfill",
    "waterfill_inverse",
    "weight_matrix",
]
