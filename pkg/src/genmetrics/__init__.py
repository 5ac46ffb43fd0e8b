"""Evaluation metrics for generative models, computed from feature files.

Everything here operates on saved feature / probability / log-likelihood
matrices (the GMF1 format in :mod:`genmetrics.store`), so the numeric
core never depends on a neural-network runtime.
"""

__version__ = "0.1.0"

from .divergence import (
    CategoricalARModel,
    DivergenceEstimate,
    ar_loglik,
    ar_sample,
    enumerate_log_probs,
    exact_kl_enumerate,
    kl_estimate,
    random_model,
    rkl_estimate,
    testbed_trajectory,
    uniform_model,
)
from .errors import (
    DataError,
    DegenerateError,
    FormatError,
    MetricsError,
    NumericalError,
    UsageError,
)
from .extrapolate import ExtrapolationCurve, extrapolate_to_infinity, fid_infinity, is_infinity
from .gaussian import (
    GaussianModel,
    fid,
    fit_gaussian,
    frechet_distance,
    gaussian_log_density,
    matrix_sqrt_psd,
    rank_by_likelihood,
)
from .kernel import KernelSpec, KidResult, kernel_eval, kid, mmd2_unbiased
from .score import IsResult, inception_score
from .stattests import (
    CorrelationMatrix,
    NormalityReport,
    ScoreTable,
    correlation_matrix,
    dagostino_k2,
    kendall_tau,
    pearson_r,
    projection_normality,
    random_unit_vector,
    spearman_rho,
)
from .store import (
    DATA_SAMPLES,
    FeatureMatrix,
    LogLikelihoodTable,
    ProbMatrix,
    ProvenanceMeta,
    SampleSource,
    model_samples,
    read_matrix,
    write_matrix,
)
