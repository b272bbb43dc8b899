"""Eigendecomposition of the discretized covariance, FVE truncation, and scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EvaluationGrid, FunctionalDataset, riemann_inner
from .errors import (
    DimensionError,
    DomainError,
    EmptySpectrumError,
    NumericalError,
    SparseDesignError,
)
from .smoothing import CovEstimate, MeanEstimate

__all__ = ["EigenSystem", "ScoreMatrix", "eigendecompose", "select_L", "scores_integration", "scores_pace"]

L_HARD_CAP = 20  # keeps the cross-split determinants well conditioned


@dataclass(frozen=True)
class EigenSystem:
    """Positive eigenpairs of the discretized covariance operator.

    `eigenvalues` are operator eigenvalues (grid spacing times the matrix
    eigenvalues), sorted descending.  Column v of `eigenfunctions` holds the
    grid values of the v-th eigenfunction, normalized so that
    delta * sum_i phi(t_i)^2 = 1, with the sign fixed so that the entry of
    largest magnitude is positive.
    """

    grid: EvaluationGrid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray

    @property
    def L(self) -> int:
        return len(self.eigenvalues)

    def at(self, times, k: int | None = None) -> np.ndarray:
        """Eigenfunctions linearly interpolated at arbitrary times (constant at ends)."""
        times = np.asarray(times, dtype=np.float64)
        k = self.L if k is None else k
        out = np.empty((len(times), k))
        for v in range(k):
            out[:, v] = np.interp(times, self.grid.points, self.eigenfunctions[:, v])
        return out


@dataclass(frozen=True)
class ScoreMatrix:
    """Estimated FPC scores, one row per subject; `method` tags the estimator."""

    values: np.ndarray
    method: str


def eigendecompose(cov: CovEstimate) -> EigenSystem:
    """Spectral decomposition of the discretized covariance estimate.

    Matrix eigenvalues are scaled by the grid spacing to approximate operator
    eigenvalues, eigenvectors by delta^{-1/2} to approximate unit-L2
    eigenfunctions.  Non-positive eigenpairs are discarded.
    """
    mat = cov.matrix
    if mat.shape[0] != mat.shape[1]:
        raise DimensionError("covariance matrix must be square")
    if not np.allclose(mat, mat.T, atol=1e-10):
        raise DimensionError("covariance matrix must be symmetric")
    try:
        w, vec = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(w)[::-1]
    w = w[order]
    vec = vec[:, order]
    keep = w > 0.0
    w = w[keep]
    vec = vec[:, keep]
    delta = cov.grid.delta
    lam = delta * w
    phi = vec / np.sqrt(delta)
    for k in range(phi.shape[1]):
        j = int(np.argmax(np.abs(phi[:, k])))
        if phi[j, k] < 0:
            phi[:, k] = -phi[:, k]
    return EigenSystem(grid=cov.grid, eigenvalues=lam, eigenfunctions=phi)


def select_L(
    eig: EigenSystem,
    fve_threshold: float,
    n_subjects: int | None = None,
    cap: int = L_HARD_CAP,
) -> int:
    """Smallest L whose fraction of variance explained reaches the threshold.

    Computed over the positive eigenvalues; additionally capped at their
    count, at n - 1 when the subject count is known, and at `cap`.
    """
    if not 0.0 < fve_threshold <= 1.0:
        raise DomainError(f"fve threshold must be in (0, 1], got {fve_threshold}")
    lam = eig.eigenvalues
    if len(lam) == 0:
        raise EmptySpectrumError("no positive eigenvalues")
    fve = np.cumsum(lam) / np.sum(lam)
    reached = np.nonzero(fve >= fve_threshold - 1e-15)[0]
    L = int(reached[0]) + 1 if len(reached) else len(lam)
    L = min(L, len(lam), cap)
    if n_subjects is not None:
        L = min(L, n_subjects - 1)
    return max(L, 1)


def _check_dense(subject, delta: float):
    t = subject.times
    if len(t) < 10:
        return False
    gaps = np.diff(np.concatenate([[0.0], t, [1.0]]))
    return bool(np.max(gaps) <= 5.0 * delta)


def scores_integration(
    data: FunctionalDataset, mean: MeanEstimate, eig: EigenSystem, k: int
) -> ScoreMatrix:
    """Riemann-integral scores for densely observed subjects.

    Each subject's centered observations are linearly interpolated onto the
    grid and paired with each retained eigenfunction.  Requires every subject
    to have at least 10 observations with no gap wider than 5 grid spacings.
    """
    if k > eig.L:
        raise DimensionError(f"requested {k} components but only {eig.L} are retained")
    grid = eig.grid
    out = np.empty((data.n_subjects, k))
    for i, s in enumerate(data.subjects):
        if not _check_dense(s, grid.delta):
            raise SparseDesignError(
                f"subject {s.id!r} is too sparse for integration scores; "
                "use the conditional-expectation scores instead"
            )
        centered = s.values - mean.at(s.times)
        on_grid = np.interp(grid.points, s.times, centered)
        for v in range(k):
            out[i, v] = riemann_inner(on_grid, eig.eigenfunctions[:, v], grid.delta)
    return ScoreMatrix(values=out, method="integration")


def scores_pace(
    data: FunctionalDataset,
    mean: MeanEstimate,
    eig: EigenSystem,
    sigma2: float,
    k: int,
) -> ScoreMatrix:
    """Best-linear-predictor scores under a working Gaussian model.

    xi_i = Lambda Phi_i^T (Phi_i Lambda Phi_i^T + sigma2 I)^{-1} (Y_i - mu(T_i))
    with Phi_i the eigenfunctions interpolated at subject i's times.  Solved
    per subject with a linear solve, never an explicit inverse.
    """
    if sigma2 <= 0:
        raise DomainError(f"sigma2 must be positive, got {sigma2}")
    if k > eig.L:
        raise DimensionError(f"requested {k} components but only {eig.L} are retained")
    lam = eig.eigenvalues[:k]
    out = np.empty((data.n_subjects, k))
    for i, s in enumerate(data.subjects):
        phi = eig.at(s.times, k)
        resid = s.values - mean.at(s.times)
        cov_y = (phi * lam[None, :]) @ phi.T + sigma2 * np.eye(len(s))
        try:
            sol = np.linalg.solve(cov_y, resid)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular score system for subject {s.id!r}: {exc}") from exc
        out[i] = lam * (phi.T @ sol)
    return ScoreMatrix(values=out, method="conditional-expectation")
