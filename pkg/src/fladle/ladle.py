"""The split-sample rank estimator for the covariance operator.

The estimator combines two normalized curves over candidate ranks
l = 1..L: g(l), the normalized eigenvalue of the full-data fit, and f(l),
the variability of the leading eigenspaces estimated from two disjoint data
halves, measured through the determinant of their cross Gram matrix.  Their
sum h(l) = f(l) + g(l) is V-shaped with its minimum at the true rank: below
the rank both halves estimate the same eigenfunctions (f small) while the
eigenvalues are still large (g large); above it the eigenvalues are near zero
but the sample eigenfunctions of the null space are noise, so the cross Gram
matrix loses mass and f jumps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FunctionalDataset, split_dataset
from .errors import DegenerateSpectrumError, DimensionError, DomainError, InsufficientSignalError
from .fitting import EstimationOptions, FittedModel, fit_half, fit_pipeline
from .fpca import select_L

__all__ = ["LadleResult", "cross_gram", "f_curve", "g_curve", "ladle_estimate"]

# The l = 1..L search range must extend past the true rank but not far past
# it: every extra index with fU near one inflates the normalizing sum in f
# and flattens the jump at d + 1 until the decline of g outweighs it.  The
# range therefore stops one past the eigenvalues that carry signal, where
# "signal" means at least SIGNAL_FRACTION of the leading eigenvalue.  When
# lambda_d itself falls below the threshold, the minimizer still lands on d
# at the range boundary because g decreases and f stays flat up to the rank.
SIGNAL_FRACTION = 0.05
SIGNAL_SPARE = 1


@dataclass(frozen=True)
class LadleResult:
    """Curves f, g, h over l = 1..L and the estimated rank d_hat = argmin h."""

    L: int
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    d_hat: int
    fU_raw: np.ndarray
    seed: int
    metadata: dict


def cross_gram(B1: np.ndarray, B2: np.ndarray, delta: float, ell: int) -> np.ndarray:
    """Riemann inner products between the leading eigenfunctions of two halves.

    Entry (i, j) of the l x l output approximates the L2 inner product of the
    i-th eigenfunction from the first half with the j-th from the second.
    """
    B1 = np.asarray(B1, dtype=np.float64)
    B2 = np.asarray(B2, dtype=np.float64)
    if B1.shape[0] != B2.shape[0]:
        raise DimensionError(
            f"eigenfunction matrices sampled on different grids: {B1.shape[0]} vs {B2.shape[0]} rows"
        )
    if ell < 1 or ell > min(B1.shape[1], B2.shape[1]):
        raise DimensionError(
            f"ell={ell} exceeds available columns ({B1.shape[1]}, {B2.shape[1]})"
        )
    return delta * (B1[:, :ell].T @ B2[:, :ell])


def f_curve(B1: np.ndarray, B2: np.ndarray, delta: float, L: int):
    """Eigenspace-variability curve from the two halves' eigenfunctions.

    fU(l) = 1 - |det(cross_gram(l))|, clamped into [0, 1] (discretization can
    push |det| slightly above one); f(l) = fU(l) / (1 + sum_k fU(k)).  Returns
    (f, fU_raw) with fU_raw the values before clamping.
    """
    if L < 1:
        raise DomainError("L must be at least 1")
    fU_raw = np.empty(L)
    for ell in range(1, L + 1):
        sign, logabs = np.linalg.slogdet(cross_gram(B1, B2, delta, ell))
        absdet = 0.0 if sign == 0 else float(np.exp(logabs))
        fU_raw[ell - 1] = 1.0 - absdet
    fU = np.clip(fU_raw, 0.0, 1.0)
    f = fU / (1.0 + np.sum(fU))
    return f, fU_raw


def g_curve(eigenvalues, L: int) -> np.ndarray:
    """Eigenvalues normalized by the sum of the first L of them."""
    lam = np.asarray(eigenvalues, dtype=np.float64)[:L]
    if len(lam) < L:
        raise DimensionError(f"need {L} eigenvalues, got {len(lam)}")
    if np.any(lam < 0):
        raise DomainError("eigenvalues must be non-negative")
    total = np.sum(lam)
    if total <= 0:
        raise DegenerateSpectrumError("all leading eigenvalues are zero")
    return lam / total


def ladle_from_fit(
    data: FunctionalDataset, full: FittedModel, options: EstimationOptions, seed: int
) -> LadleResult:
    """Run the split, per-half fits, and curve assembly given the full-data fit."""
    split = split_dataset(data, seed)
    half1 = fit_half(split.first, full, options)
    half2 = fit_half(split.second, full, options)
    if half1.eig.L < 2 or half2.eig.L < 2:
        raise InsufficientSignalError(
            f"a data half retains fewer than 2 positive eigenvalues "
            f"({half1.eig.L} and {half2.eig.L}); not enough signal to assess variability"
        )
    lam_full = full.eig.eigenvalues
    n_signal = int(np.sum(lam_full >= SIGNAL_FRACTION * lam_full[0]))
    cap = min(options.l_cap, n_signal + SIGNAL_SPARE)
    L_full = select_L(full.eig, options.fve_threshold, n_subjects=data.n_subjects, cap=cap)
    L = min(L_full, half1.eig.L, half2.eig.L)
    f, fU_raw = f_curve(
        half1.eig.eigenfunctions, half2.eig.eigenfunctions, full.grid.delta, L
    )
    g = g_curve(full.eig.eigenvalues, L)
    h = f + g
    d_hat = int(np.argmin(h)) + 1
    metadata = {
        "design": full.design,
        "grid_size": len(full.grid),
        "h_mu": full.h_mu,
        "h_g": full.h_g,
        "h_mu_half": half1.h_mu,
        "h_g_half": half1.h_g,
        "sigma2": full.sigma2,
        "fve_threshold": options.fve_threshold,
        "l_cap": options.l_cap,
        "n_signal": n_signal,
        "L_full": L_full,
        "L_half1": half1.eig.L,
        "L_half2": half2.eig.L,
        "seed": int(seed),
    }
    return LadleResult(
        L=L, f=f, g=g, h=h, d_hat=d_hat, fU_raw=fU_raw, seed=int(seed), metadata=metadata
    )


def ladle_estimate(
    data: FunctionalDataset, options: EstimationOptions | None = None, seed: int = 0
) -> LadleResult:
    """Estimate the rank of the covariance operator.

    Splits the subjects in half by `seed`, fits mean/covariance/eigensystem
    per half and on the full data, builds f from the halves' eigenfunctions
    and g from the full-data eigenvalues over l = 1..L, and returns the
    smallest minimizer of h = f + g.  L is the smallest of the full-data FVE
    choice, the halves' positive-eigenvalue counts, and the configured cap.
    """
    options = options or EstimationOptions()
    full = fit_pipeline(data, options)
    return ladle_from_fit(data, full, options, seed)
