"""Scalar-on-function linear regression through FPC scores.

The functional covariate is reduced to its leading score vector, the response
is regressed on [1, xi_1, ..., xi_d] by least squares, and the slope function
is rebuilt on the grid as the matching combination of eigenfunctions.  Test
scores must be computed against the training mean and eigenfunctions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CollinearityError, DimensionError
from .fpca import EigenSystem, ScoreMatrix

__all__ = ["FpcRegressionFit", "fit_fpc_regression", "predict", "prediction_error"]


@dataclass(frozen=True)
class FpcRegressionFit:
    """OLS fit of a response on the leading FPC scores."""

    intercept: float
    coefficients: np.ndarray
    slope_on_grid: np.ndarray
    d_used: int
    eig: EigenSystem


def fit_fpc_regression(scores: ScoreMatrix, y, d: int, eig: EigenSystem) -> FpcRegressionFit:
    """Least squares of y on [1, xi_1..xi_d] via an orthogonal factorization.

    The slope function on the grid is sum_v beta_v phi_v(t_i).  A rank
    deficient design raises, naming the dependent score columns.
    """
    y = np.asarray(y, dtype=np.float64)
    xi = np.asarray(scores.values, dtype=np.float64)
    if xi.ndim != 2 or len(y) != xi.shape[0]:
        raise DimensionError(f"scores ({xi.shape}) and response ({y.shape}) do not line up")
    if d < 1 or d > xi.shape[1]:
        raise DimensionError(f"d={d} outside the score matrix's {xi.shape[1]} columns")
    if len(y) < d + 2:
        raise DimensionError(f"need at least d + 2 = {d + 2} observations, got {len(y)}")
    design = np.column_stack([np.ones(len(y)), xi[:, :d]])
    rank = np.linalg.matrix_rank(design)
    if rank < d + 1:
        offending = []
        r = 0
        for j in range(design.shape[1]):
            rj = np.linalg.matrix_rank(design[:, : j + 1])
            if rj == r:
                offending.append("intercept" if j == 0 else f"score {j}")
            r = rj
        raise CollinearityError(f"rank deficient design; dependent columns: {offending}")
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    slope = eig.eigenfunctions[:, :d] @ beta[1:]
    return FpcRegressionFit(
        intercept=float(beta[0]),
        coefficients=beta[1:].copy(),
        slope_on_grid=slope,
        d_used=int(d),
        eig=eig,
    )


def predict(fit: FpcRegressionFit, scores_test: ScoreMatrix) -> np.ndarray:
    """Predicted responses beta_0 + sum_v beta_v xi_v for each test row."""
    xi = np.asarray(scores_test.values, dtype=np.float64)
    if xi.shape[1] < fit.d_used:
        raise DimensionError(
            f"test scores have {xi.shape[1]} columns, fit needs {fit.d_used}"
        )
    return fit.intercept + xi[:, : fit.d_used] @ fit.coefficients


def prediction_error(y, y_hat) -> float:
    """Mean squared prediction error over the test index set."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise DimensionError(f"shape mismatch: {y.shape} vs {y_hat.shape}")
    return float(np.mean((y - y_hat) ** 2))
