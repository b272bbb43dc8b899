"""Dispatch a dataset to any of the rank estimators behind one interface."""

from __future__ import annotations

from .core import FunctionalDataset
from .criteria import aic_li, aic_yao, bic_li, bic_pace
from .errors import DomainError
from .fitting import EstimationOptions, FittedModel, fit_pipeline
from .fpca import select_L
from .ladle import LadleResult, ladle_from_fit

METHOD_NAMES = ("fle", "aic-yao", "bic-pace", "aic-li", "bic-li")

__all__ = ["METHOD_NAMES", "estimate_ranks", "estimate_rank"]


def _criterion_rank(method: str, data: FunctionalDataset, full: FittedModel, L: int) -> int:
    if method == "aic-yao":
        return aic_yao(data, full.mean, full.eig, full.sigma2, L).k_hat
    if method == "bic-pace":
        return bic_pace(data, full.mean, full.eig, full.sigma2, L).k_hat
    if method == "aic-li":
        design = "dense" if full.design == "dense-regular" else "sparse"
        return aic_li(data, full.mean, full.eig, full.sigma2, L, design).k_hat
    if method == "bic-li":
        return bic_li(full.eig.eigenvalues, L, data.n_subjects).k_hat
    raise DomainError(f"unknown method {method!r}")


def estimate_ranks(
    data: FunctionalDataset,
    methods,
    options: EstimationOptions | None = None,
    seed: int = 0,
) -> dict:
    """Run several selectors on one dataset, sharing the fitted model.

    Returns {method: d_hat} with a per-method Exception in place of the rank
    when that selector fails.  The full-data fit (bandwidths included) is
    computed once and shared.
    """
    options = options or EstimationOptions()
    for m in methods:
        if m not in METHOD_NAMES:
            raise DomainError(f"unknown method {m!r}; choose from {METHOD_NAMES}")
    full = fit_pipeline(data, options)
    L = select_L(full.eig, options.fve_threshold, n_subjects=data.n_subjects, cap=options.l_cap)
    out = {}
    for m in methods:
        try:
            if m == "fle":
                out[m] = ladle_from_fit(data, full, options, seed).d_hat
            else:
                out[m] = _criterion_rank(m, data, full, L)
        except Exception as exc:
            out[m] = exc
    return out


def estimate_rank(
    data: FunctionalDataset,
    method: str = "fle",
    options: EstimationOptions | None = None,
    seed: int = 0,
):
    """Single-method convenience wrapper; returns d_hat or the LadleResult."""
    options = options or EstimationOptions()
    if method == "fle":
        full = fit_pipeline(data, options)
        return ladle_from_fit(data, full, options, seed)
    res = estimate_ranks(data, [method], options, seed)[method]
    if isinstance(res, Exception):
        raise res
    return res
