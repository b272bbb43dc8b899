"""Information-criterion baselines for choosing the number of components.

Four selectors over k = 1..L: a pseudo-AIC and pseudo-BIC built on a working
Gaussian likelihood with conditional-expectation scores, and two modified
criteria (a residual-based AIC with a per-subject score penalty and a
spectrum-only BIC whose penalty scales with the average retained eigenvalue).
The exact constants are this package's documented reconstructions; they are
reported in each trace's `ingredients`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FunctionalDataset
from .errors import DomainError
from .fpca import EigenSystem, ScoreMatrix, scores_integration, scores_pace
from .smoothing import MeanEstimate

__all__ = [
    "CriterionTrace",
    "pseudo_loglik",
    "aic_yao",
    "bic_pace",
    "aic_li",
    "bic_li",
    "select_order_ic",
]

SIGMA2_FLOOR = 1e-6


@dataclass(frozen=True)
class CriterionTrace:
    """Criterion values over k = 1..L and the selected order."""

    name: str
    values: np.ndarray
    k_hat: int
    ingredients: dict

    @classmethod
    def build(cls, name: str, values: np.ndarray, ingredients: dict) -> "CriterionTrace":
        values = np.asarray(values, dtype=np.float64)
        return cls(name=name, values=values, k_hat=int(np.argmin(values)) + 1, ingredients=ingredients)


def _reconstruction_rss(
    data: FunctionalDataset, mean: MeanEstimate, eig: EigenSystem, scores: ScoreMatrix, k: int
) -> float:
    rss = 0.0
    xi = scores.values
    for i, s in enumerate(data.subjects):
        phi = eig.at(s.times, k)
        fitted = mean.at(s.times) + phi @ xi[i, :k]
        rss += float(np.sum((s.values - fitted) ** 2))
    return rss


def pseudo_loglik(
    data: FunctionalDataset, mean: MeanEstimate, eig: EigenSystem, sigma2: float, k: int
) -> float:
    """Working Gaussian log-likelihood of the k-component reconstruction.

    Scores come from the conditional-expectation estimator; the returned value
    is -(1/2) sum_ij [log(2 pi sigma2) + (Y_ij - Yhat_ij)^2 / sigma2].
    """
    if sigma2 <= 0:
        raise DomainError(f"sigma2 must be positive, got {sigma2}")
    scores = scores_pace(data, mean, eig, sigma2, k)
    rss = _reconstruction_rss(data, mean, eig, scores, k)
    n_total = data.n_total
    return -0.5 * (n_total * math.log(2.0 * math.pi * sigma2) + rss / sigma2)


def _pseudo_ic(name, data, mean, eig, sigma2, L, penalty_fn):
    sigma2 = max(sigma2, SIGMA2_FLOOR)
    n_total = data.n_total
    values = np.empty(L)
    logliks = np.empty(L)
    rss = np.empty(L)
    penalties = np.empty(L)
    for k in range(1, L + 1):
        scores = scores_pace(data, mean, eig, sigma2, k)
        rss[k - 1] = _reconstruction_rss(data, mean, eig, scores, k)
        logliks[k - 1] = -0.5 * (
            n_total * math.log(2.0 * math.pi * sigma2) + rss[k - 1] / sigma2
        )
        penalties[k - 1] = penalty_fn(k, n_total)
        values[k - 1] = -2.0 * logliks[k - 1] + penalties[k - 1]
    return CriterionTrace.build(
        name,
        values,
        ingredients={
            "rss": rss,
            "loglik": logliks,
            "penalty": penalties,
            "sigma2": sigma2,
            "N_total": n_total,
        },
    )


def aic_yao(data, mean, eig, sigma2, L: int) -> CriterionTrace:
    """Pseudo-AIC: -2 loglik(k) + 2k."""
    return _pseudo_ic("AIC_YAO", data, mean, eig, sigma2, L, lambda k, n_total: 2.0 * k)


def bic_pace(data, mean, eig, sigma2, L: int) -> CriterionTrace:
    """Pseudo-BIC: -2 loglik(k) + k log(N_total)."""
    return _pseudo_ic(
        "BIC_PACE", data, mean, eig, sigma2, L, lambda k, n_total: k * math.log(n_total)
    )


def aic_li(data, mean, eig, sigma2, L: int, design: str) -> CriterionTrace:
    """Residual-based modified AIC: N log(RSS_k / N) + 2 k n.

    The reconstruction uses integration scores on dense designs and
    conditional-expectation scores on sparse ones; the penalty charges two
    units per retained score vector (one per subject per component), which is
    what keeps the criterion honest when each component adds a whole
    n-vector of fitted scores rather than a single parameter.
    """
    if design not in ("dense", "sparse"):
        raise DomainError(f"design must be 'dense' or 'sparse', got {design!r}")
    sigma2 = max(sigma2, SIGMA2_FLOOR)
    n = data.n_subjects
    n_total = data.n_total
    values = np.empty(L)
    rss = np.empty(L)
    penalties = np.empty(L)
    for k in range(1, L + 1):
        if design == "dense":
            scores = scores_integration(data, mean, eig, k)
        else:
            scores = scores_pace(data, mean, eig, sigma2, k)
        rss[k - 1] = max(_reconstruction_rss(data, mean, eig, scores, k), 1e-300)
        penalties[k - 1] = 2.0 * k * n
        values[k - 1] = n_total * math.log(rss[k - 1] / n_total) + penalties[k - 1]
    return CriterionTrace.build(
        "AIC_LI",
        values,
        ingredients={
            "rss": rss,
            "penalty": penalties,
            "design": design,
            "sigma2": sigma2,
            "n": n,
            "N_total": n_total,
        },
    )


def bic_li(eigenvalues, L: int, n: int) -> CriterionTrace:
    """Spectrum-only modified BIC: tail eigenvalue mass plus a scaled count penalty.

    values(k) = sum_{v > k} lambda_v + k * tau with
    tau = (mean of the first L eigenvalues) * log(n) / sqrt(n).  Selecting k
    requires the tail beyond the true rank to fall below tau while
    lambda_{d} stays above it, so the criterion leans on the small
    eigenvalues being estimated accurately.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)[:L]
    if len(lam) < L:
        raise DomainError(f"need {L} eigenvalues, got {len(lam)}")
    tau = float(np.mean(lam)) * math.log(n) / math.sqrt(n)
    tails = np.concatenate([np.cumsum(lam[::-1])[::-1][1:], [0.0]])
    values = tails + tau * np.arange(1, L + 1)
    return CriterionTrace.build(
        "BIC_LI",
        values,
        ingredients={"tail": tails, "tau": tau, "n": n},
    )


def select_order_ic(trace: CriterionTrace) -> int:
    """The trace's selected order (smallest argmin index)."""
    return trace.k_hat
