"""Rank estimation for the covariance operator of noisy functional data."""

__version__ = "0.1.0"

from .core import (
    EvaluationGrid,
    FunctionalDataset,
    SplitPair,
    SubjectRecord,
    ingest_long_csv,
    riemann_inner,
    split_dataset,
    write_long_csv,
)
from .criteria import CriterionTrace, aic_li, aic_yao, bic_li, bic_pace, pseudo_loglik, select_order_ic
from .fitting import EstimationOptions, FittedModel, fit_pipeline
from .fpca import EigenSystem, ScoreMatrix, eigendecompose, scores_integration, scores_pace, select_L
from .ladle import LadleResult, cross_gram, f_curve, g_curve, ladle_estimate
from .methods import METHOD_NAMES, estimate_rank, estimate_ranks
from .regression import FpcRegressionFit, fit_fpc_regression, predict, prediction_error
from .simulation import (
    GeneratedData,
    SimulationConfig,
    StudyReport,
    appendix_a_preset,
    fourier_basis,
    generate,
    paper_mean,
    run_study,
)
from .smoothing import (
    CovEstimate,
    MeanEstimate,
    dense_regular_cov,
    dense_regular_mean,
    gcv_bandwidth_cov,
    gcv_bandwidth_mean,
    local_linear_cov,
    local_linear_mean,
    raw_cov_pairs,
    rice_sigma2,
)
