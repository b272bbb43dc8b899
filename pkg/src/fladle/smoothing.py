"""Local linear estimators of the mean curve and covariance surface.

The irregular-design path pools observations across subjects and smooths with
an Epanechnikov kernel; bandwidths come from generalized cross-validation.
The dense-regular path uses the cross-sectional sample mean, the raw empirical
covariance, and a first-difference noise-variance estimator, subtracting the
noise ridge from the covariance diagonal.

Both smoothers reproduce affine inputs exactly, which the tests rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _fastcov
from .core import EvaluationGrid, FunctionalDataset
from .errors import (
    BandwidthSelectionError,
    BandwidthTooSmallError,
    DesignMismatchError,
    DimensionError,
    DomainError,
    InsufficientGridError,
)

__all__ = [
    "MeanEstimate",
    "CovEstimate",
    "GcvProfile",
    "epanechnikov",
    "default_bandwidth_candidates",
    "fixed_hg_bandwidth",
    "local_linear_mean",
    "gcv_profile_mean",
    "gcv_bandwidth_mean",
    "raw_cov_pairs",
    "local_linear_cov",
    "gcv_profile_cov",
    "gcv_bandwidth_cov",
    "estimate_noise_variance_irregular",
    "dense_regular_mean",
    "rice_sigma2",
    "dense_regular_cov",
]

_DET_TOL = 1e-12


@dataclass(frozen=True)
class MeanEstimate:
    """Estimated mean curve on a grid; bandwidth is None on the dense path."""

    grid: EvaluationGrid
    values: np.ndarray
    bandwidth: float | None

    def at(self, times) -> np.ndarray:
        """Linear interpolation between grid points (constant at the ends)."""
        return np.interp(np.asarray(times, dtype=np.float64), self.grid.points, self.values)


@dataclass(frozen=True)
class CovEstimate:
    """Estimated covariance surface on grid x grid, symmetrized."""

    grid: EvaluationGrid
    matrix: np.ndarray
    bandwidth: float | None
    noise_variance: float | None = None


@dataclass(frozen=True)
class GcvProfile:
    """Per-candidate GCV scores; inadmissible candidates carry NaN."""

    candidates: np.ndarray
    scores: np.ndarray
    selected: float


def epanechnikov(u):
    """K(u) = 0.75 (1 - u^2) on |u| <= 1, zero outside."""
    u = np.asarray(u, dtype=np.float64)
    return 0.75 * np.maximum(1.0 - u * u, 0.0)


def default_bandwidth_candidates(pooled_times, k: int = 10) -> np.ndarray:
    """Ten log-spaced bandwidths from 1.5 x (largest gap in the pooled times) to 0.5."""
    t = np.sort(np.asarray(pooled_times, dtype=np.float64))
    if len(t) < 2:
        raise DimensionError("need at least two pooled observations")
    max_gap = float(np.max(np.diff(t)))
    lo = 1.5 * max_gap
    hi = 0.5
    if lo <= 0.0:
        lo = hi / 64.0
    if lo >= hi:
        return np.array([hi])
    return np.geomspace(lo, hi, k)


def fixed_hg_bandwidth(n: int) -> float:
    """The n^(-1/5)/6 surface bandwidth shortcut for dense irregular designs."""
    return float(n) ** (-0.2) / 6.0


# ---------------------------------------------------------------------------
# mean curve
# ---------------------------------------------------------------------------


def _pooled_sorted(data: FunctionalDataset):
    t, y = data.pooled()
    order = np.argsort(t, kind="stable")
    return t[order], y[order]


def local_linear_mean(data: FunctionalDataset, h: float, grid: EvaluationGrid) -> MeanEstimate:
    """Local linear fit of the mean curve at every grid point.

    Pools all observations, weights them with an Epanechnikov kernel of
    bandwidth `h`, and returns the local intercepts.  Windows with fewer than
    three observations or fewer than two distinct times are degenerate.
    """
    if h <= 0:
        raise DomainError(f"bandwidth must be positive, got {h}")
    t, y = _pooled_sorted(data)
    values = np.empty(len(grid))
    for gi, g in enumerate(grid.points):
        lo = np.searchsorted(t, g - h, side="left")
        hi = np.searchsorted(t, g + h, side="right")
        if hi - lo < 3:
            raise BandwidthTooSmallError(
                f"mean window at grid point t={g:.6g} holds {hi - lo} observations (< 3); "
                f"increase the bandwidth from h={h:.6g}"
            )
        du = (t[lo:hi] - g) / h
        w = 0.75 * (1.0 - du * du)
        support = du[w > 0]
        if np.unique(support).size < 2:
            raise BandwidthTooSmallError(
                f"mean window at grid point t={g:.6g} has fewer than 2 distinct times; "
                f"increase the bandwidth from h={h:.6g}"
            )
        yw = y[lo:hi]
        s0 = np.sum(w)
        s1 = np.sum(w * du)
        s2 = np.sum(w * du * du)
        r0 = np.sum(w * yw)
        r1 = np.sum(w * du * yw)
        det = s0 * s2 - s1 * s1
        if det <= _DET_TOL * s0 * s0:
            raise BandwidthTooSmallError(
                f"degenerate mean window at grid point t={g:.6g} with h={h:.6g}"
            )
        values[gi] = (s2 * r0 - s1 * r1) / det
    return MeanEstimate(grid=grid, values=values, bandwidth=float(h))


def _mean_prefix_arrays(t: np.ndarray, y: np.ndarray):
    n = len(t)
    P = np.zeros((5, n + 1))
    Q = np.zeros((4, n + 1))
    tk = np.ones_like(t)
    for k in range(5):
        P[k, 1:] = np.cumsum(tk)
        if k < 4:
            Q[k, 1:] = np.cumsum(tk * y)
        tk = tk * t
    neq = np.empty(n)
    neq[0] = 1.0
    neq[1:] = (t[1:] != t[:-1]).astype(np.float64)
    E = np.concatenate([[0.0], np.cumsum(neq)])
    return P, Q, E


_BINOM = [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1], [1, 4, 6, 4, 1]]


def _mean_design_at(P, Q, t_sorted, eval_t, h):
    """Vectorized local-linear design sums at many evaluation points.

    Uses prefix sums of raw monomials; exact up to a benign cancellation of
    order 1e-12, which is irrelevant for GCV comparisons.
    """
    lo = np.searchsorted(t_sorted, eval_t - h, side="left")
    hi = np.searchsorted(t_sorted, eval_t + h, side="right")
    W = [P[k, hi] - P[k, lo] for k in range(5)]
    V = [Q[k, hi] - Q[k, lo] for k in range(4)]

    negt = [np.ones_like(eval_t)]
    for _ in range(4):
        negt.append(negt[-1] * (-eval_t))

    def centered(raw, k):
        acc = np.zeros_like(eval_t)
        for j in range(k + 1):
            acc += _BINOM[k][j] * raw[j] * negt[k - j]
        return acc

    cp = [centered(W, k) for k in range(5)]
    cr = [centered(V, k) for k in range(4)]
    s0 = 0.75 * (cp[0] - cp[2] / h**2)
    s1 = 0.75 * (cp[1] / h - cp[3] / h**3)
    s2 = 0.75 * (cp[2] / h**2 - cp[4] / h**4)
    r0 = 0.75 * (cr[0] - cr[2] / h**2)
    r1 = 0.75 * (cr[1] / h - cr[3] / h**3)
    det = s0 * s2 - s1 * s1
    return s0, s1, s2, r0, r1, det, lo, hi


def _rss_floor(values: np.ndarray) -> float:
    # exact fits leave only rounding noise; snap it to zero so that ties
    # resolve to the smallest admissible bandwidth deterministically
    scale = max(1.0, float(np.max(np.abs(values))) if len(values) else 1.0)
    return len(values) * (1e-10 * scale) ** 2


def gcv_profile_mean(data: FunctionalDataset, candidates, grid: EvaluationGrid) -> GcvProfile:
    """GCV(h) = RSS(h) / (1 - tr(S_h)/N)^2 over the pooled observation points.

    RSS and the hat trace are evaluated exactly at the observation points.
    A candidate is skipped when any grid window violates the mean smoother's
    preconditions, when an observation window is degenerate, or when the
    trace reaches N.  Residual sums below rounding noise are treated as zero.
    """
    candidates = np.sort(np.asarray(candidates, dtype=np.float64))
    if len(candidates) == 0 or np.any(candidates <= 0):
        raise BandwidthSelectionError("candidate bandwidths must be positive and non-empty")
    t, y = _pooled_sorted(data)
    n_total = len(t)
    P, Q, E = _mean_prefix_arrays(t, y)
    floor = _rss_floor(y)
    scores = np.full(len(candidates), np.nan)
    for ci, h in enumerate(candidates):
        try:
            local_linear_mean(data, h, grid)
        except BandwidthTooSmallError:
            continue
        s0, s1, s2, r0, r1, det, lo, hi = _mean_design_at(P, Q, t, t, h)
        distinct = np.where(hi > lo, E[np.maximum(hi - 1, 0)] - E[lo] + 1, 0)
        if np.any(hi - lo < 1) or np.any(distinct < 2) or np.any(det <= _DET_TOL * s0 * s0):
            continue
        fitted = (s2 * r0 - s1 * r1) / det
        hat = 0.75 * s2 / det
        trace = float(np.sum(hat))
        if trace >= n_total:
            continue
        rss = float(np.sum((y - fitted) ** 2))
        if rss < floor:
            rss = 0.0
        scores[ci] = rss / (1.0 - trace / n_total) ** 2
    if np.all(np.isnan(scores)):
        raise BandwidthSelectionError(
            f"no admissible candidate bandwidth among {np.array2string(candidates, precision=4)}"
        )
    best = int(np.nanargmin(scores))
    return GcvProfile(candidates=candidates, scores=scores, selected=float(candidates[best]))


def gcv_bandwidth_mean(data: FunctionalDataset, candidates, grid: EvaluationGrid) -> float:
    return gcv_profile_mean(data, candidates, grid).selected


# ---------------------------------------------------------------------------
# covariance surface
# ---------------------------------------------------------------------------


def raw_cov_pairs(data: FunctionalDataset, mean: MeanEstimate) -> np.ndarray:
    """Raw covariances for all ordered off-diagonal pairs, one row (s, t, r) each.

    For subject i and j != l the row is
    (T_ij, T_il, {Y_ij - mu(T_ij)}{Y_il - mu(T_il)}).  Excluding j = l drops
    the measurement-error ridge.  Subjects with one observation contribute
    nothing.
    """
    chunks = []
    for s in data.subjects:
        ni = len(s)
        if ni < 2:
            continue
        resid = s.values - mean.at(s.times)
        rr = np.outer(resid, resid)
        tt_a = np.broadcast_to(s.times[:, None], (ni, ni))
        tt_b = np.broadcast_to(s.times[None, :], (ni, ni))
        off = ~np.eye(ni, dtype=bool)
        chunks.append(np.column_stack([tt_a[off], tt_b[off], rr[off]]))
    if not chunks:
        return np.empty((0, 3))
    return np.concatenate(chunks, axis=0)


def _grid_eval_points(grid: EvaluationGrid):
    g = grid.points
    s = np.repeat(g, len(g))
    t = np.tile(g, len(g))
    return s, t


def local_linear_cov(pairs: np.ndarray, h: float, grid: EvaluationGrid) -> CovEstimate:
    """Bivariate local linear fit of the covariance surface on the grid.

    Uses the product Epanechnikov kernel with a common bandwidth in both
    directions and symmetrizes the output as (M + M^T)/2.  Every grid window
    must hold at least four raw pairs and a non-degenerate local design.
    """
    if h <= 0:
        raise DomainError(f"bandwidth must be positive, got {h}")
    pairs = np.asarray(pairs, dtype=np.float64)
    if pairs.ndim != 2 or pairs.shape[1] != 3:
        raise DimensionError("pairs must be an (n, 3) array of (s, t, r) rows")
    index = _fastcov.PairIndex(pairs[:, 0], pairs[:, 1], pairs[:, 2])
    fitted, *_ = _grid_surface_fit(index, grid, h)
    m = len(grid)
    mat = fitted.reshape(m, m)
    mat = (mat + mat.T) / 2.0
    return CovEstimate(grid=grid, matrix=mat, bandwidth=float(h), noise_variance=None)


def _grid_surface_fit(index: "_fastcov.PairIndex", grid: EvaluationGrid, h: float):
    """Local plane fit at every grid node; raises on any degenerate window."""
    ev_s, ev_t = _grid_eval_points(grid)
    sums = index.windowed_sums(ev_s, ev_t, h)
    counts = _fastcov.counts_in_windows(sums)
    S, T = _fastcov.design_moments(sums, ev_s, ev_t, h)
    fitted, det_rel, cof, det = _fastcov.solve_local_plane(S, T)
    bad = (counts < 4) | (det_rel <= _DET_TOL)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise BandwidthTooSmallError(
            f"degenerate covariance window at (s, t) = ({ev_s[k]:.6g}, {ev_t[k]:.6g}) "
            f"holding {int(counts[k])} raw pairs; increase the bandwidth from h={h:.6g}"
        )
    return fitted, cof, det


def _bilinear(grid: EvaluationGrid, values_flat: np.ndarray, u: np.ndarray, v: np.ndarray):
    """Bilinear interpolation of a grid surface at scattered points.

    Returns the interpolated values plus the corner indices and weights so
    callers can propagate other per-node quantities through the same stencil.
    """
    m = len(grid)
    delta = grid.delta
    iu = np.clip((u / delta).astype(np.int64), 0, m - 2)
    iv = np.clip((v / delta).astype(np.int64), 0, m - 2)
    fu = u / delta - iu
    fv = v / delta - iv
    nodes = (iu * m + iv, (iu + 1) * m + iv, iu * m + iv + 1, (iu + 1) * m + iv + 1)
    weights = ((1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv)
    out = np.zeros_like(u)
    for node, w in zip(nodes, weights):
        out += w * values_flat[node]
    return out, nodes, weights


def _surface_gcv(pairs: np.ndarray, candidates, grid: EvaluationGrid, trace_fn) -> GcvProfile:
    """Shared GCV loop for the surface smoother.

    The smoother under selection is the full covariance pipeline: a local
    plane fit at every grid node followed by bilinear interpolation to the
    observation (raw pair) locations, matching how the fitted surface is
    consumed downstream.  RSS is accumulated over all raw pairs; the trace
    term comes from `trace_fn(h, cof, det)`.  A candidate is skipped when any
    grid window violates the surface smoother's preconditions.  Residual sums
    below rounding noise are treated as zero so exact fits tie toward the
    smallest bandwidth.
    """
    candidates = np.sort(np.asarray(candidates, dtype=np.float64))
    if len(candidates) == 0 or np.any(candidates <= 0):
        raise BandwidthSelectionError("candidate bandwidths must be positive and non-empty")
    pairs = np.asarray(pairs, dtype=np.float64)
    u, v, r = pairs[:, 0], pairs[:, 1], pairs[:, 2]
    n_total = len(u)
    index = _fastcov.PairIndex(u, v, r)
    floor = _rss_floor(r)

    scores = np.full(len(candidates), np.nan)
    for ci, h in enumerate(candidates):
        try:
            fitted_grid, cof, det = _grid_surface_fit(index, grid, h)
        except BandwidthTooSmallError:
            continue
        fitted_at_pairs, _, _ = _bilinear(grid, fitted_grid, u, v)
        trace = trace_fn(float(h), cof, det)
        if trace >= n_total:
            continue
        rss = float(np.sum((r - fitted_at_pairs) ** 2))
        if rss < floor:
            rss = 0.0
        scores[ci] = rss / (1.0 - trace / n_total) ** 2
    if np.all(np.isnan(scores)):
        raise BandwidthSelectionError(
            f"no admissible candidate bandwidth among {np.array2string(candidates, precision=4)}"
        )
    best = int(np.nanargmin(scores))
    return GcvProfile(candidates=candidates, scores=scores, selected=float(candidates[best]))


def _diag_trace_fn(pairs: np.ndarray, grid: EvaluationGrid):
    """Diagonal hat trace of the composite (grid fit + interpolation) smoother."""
    u, v = pairs[:, 0], pairs[:, 1]
    gs, gt = _grid_eval_points(grid)

    def trace(h, cof, det):
        hat = np.zeros_like(u)
        _, nodes, weights = _bilinear(grid, np.zeros(len(gs)), u, v)
        for node, w in zip(nodes, weights):
            du = (u - gs[node]) / h
            dv = (v - gt[node]) / h
            ker = (0.75 * np.maximum(1.0 - du * du, 0.0)) * (
                0.75 * np.maximum(1.0 - dv * dv, 0.0)
            )
            row = (cof[node, 0] + cof[node, 1] * du + cof[node, 2] * dv) / det[node]
            hat += w * ker * row
        return float(np.sum(hat))

    return trace


def gcv_profile_cov(pairs: np.ndarray, candidates, grid: EvaluationGrid) -> GcvProfile:
    """GCV for the surface smoother with the plain (diagonal) hat trace.

    Appropriate when the raw pairs are independent.  Raw covariances from the
    same subject are not: they share residual factors, which deflates RSS at
    small bandwidths faster than the diagonal trace can penalize.  The
    pipeline therefore selects its bandwidth with `gcv_profile_cov_clustered`,
    which sums the hat weights over all same-subject pair couples and reduces
    to this criterion for independent pairs.
    """
    pairs = np.asarray(pairs, dtype=np.float64)
    return _surface_gcv(pairs, candidates, grid, _diag_trace_fn(pairs, grid))


class _BlockTraceWorkspace:
    """Separable per-subject tensors for the clustered hat trace.

    For subject i with observation times T_j, its raw pairs are the product
    set {(T_j, T_l): j != l}, so the subject's kernel moment vector at a grid
    node factors into per-axis sums minus a same-observation correction, and
    its bilinear stencil mass factors the same way.  Everything reduces to
    (grid x grid x subject) tensors.
    """

    def __init__(self, data: FunctionalDataset, grid: EvaluationGrid):
        self.grid = grid
        g = grid.points
        m_max = max(len(s) for s in data.subjects)
        n = data.n_subjects
        self.times = np.zeros((n, m_max))
        self.mask = np.zeros((n, m_max))
        for i, s in enumerate(data.subjects):
            self.times[i, : len(s)] = s.times
            self.mask[i, : len(s)] = 1.0
        mg = len(g)
        delta = grid.delta
        # bilinear hat masses per (node, subject): La[a, i] = sum_j hat_a(T_ij)
        cell = np.clip((self.times / delta).astype(np.int64), 0, mg - 2)
        frac = self.times / delta - cell
        La = np.zeros((mg, n))
        subj = np.broadcast_to(np.arange(n)[:, None], self.times.shape)
        np.add.at(La, (cell.ravel(), subj.ravel()), ((1 - frac) * self.mask).ravel())
        np.add.at(La, (cell.ravel() + 1, subj.ravel()), (frac * self.mask).ravel())
        self.La = La
        # same-observation bilinear correction, banded in |a - b| <= 1
        DL = np.zeros((mg, 3, n))  # offsets b - a in {-1, 0, +1} -> 0, 1, 2
        w0 = (1 - frac) * self.mask
        w1 = frac * self.mask
        np.add.at(DL, (cell.ravel(), 1, subj.ravel()), (w0 * w0).ravel())
        np.add.at(DL, (cell.ravel() + 1, 1, subj.ravel()), (w1 * w1).ravel())
        np.add.at(DL, (cell.ravel(), 2, subj.ravel()), (w0 * w1).ravel())
        np.add.at(DL, (cell.ravel() + 1, 0, subj.ravel()), (w0 * w1).ravel())
        self.DL = DL

    def trace(self, h: float, cof: np.ndarray, det: np.ndarray) -> float:
        g = self.grid.points
        mg = len(g)
        X = (self.times[None, :, :] - g[:, None, None]) / h  # (mg, n, m_max)
        K = 0.75 * np.maximum(1.0 - X * X, 0.0) * self.mask[None, :, :]
        KX = K * X
        P0 = K.sum(axis=2)  # (mg, n)
        P1 = KX.sum(axis=2)
        D00 = np.einsum("aij,bij->abi", K, K, optimize=True)
        D10 = np.einsum("aij,bij->abi", KX, K, optimize=True)
        m0 = P0[:, None, :] * P0[None, :, :] - D00
        m1 = P1[:, None, :] * P0[None, :, :] - D10
        m2 = P0[:, None, :] * P1[None, :, :] - D10.transpose(1, 0, 2)
        c = cof.reshape(mg, mg, 3)
        d = det.reshape(mg, mg)
        W = (
            c[:, :, 0, None] * m0 + c[:, :, 1, None] * m1 + c[:, :, 2, None] * m2
        ) / d[:, :, None]
        total = float(np.einsum("ai,abi,bi->", self.La, W, self.La, optimize=True))
        for off in (-1, 0, 1):
            a = np.arange(max(0, -off), mg - max(0, off))
            total -= float(np.sum(self.DL[a, off + 1, :] * W[a, a + off, :]))
        return total


def gcv_profile_cov_clustered(
    data: FunctionalDataset,
    mean: MeanEstimate,
    candidates,
    grid: EvaluationGrid,
    pairs: np.ndarray | None = None,
) -> GcvProfile:
    """Surface GCV with the within-subject block hat trace.

    Same criterion as `gcv_profile_cov` except that tr(S_h) sums the hat
    weights over every couple of raw pairs from the same subject, the
    clustered-data generalization of the hat trace.  This is the selector the
    estimation pipeline uses.
    """
    if pairs is None:
        pairs = raw_cov_pairs(data, mean)
    ws = _BlockTraceWorkspace(data, grid)
    return _surface_gcv(pairs, candidates, grid, ws.trace)


def gcv_bandwidth_cov(pairs: np.ndarray, candidates, grid: EvaluationGrid) -> float:
    return gcv_profile_cov(pairs, candidates, grid).selected


def _local_linear_1d(x: np.ndarray, y: np.ndarray, h: float, eval_points: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    out = np.empty(len(eval_points))
    for i, g in enumerate(eval_points):
        lo = np.searchsorted(xs, g - h, side="left")
        hi = np.searchsorted(xs, g + h, side="right")
        du = (xs[lo:hi] - g) / h
        w = 0.75 * (1.0 - du * du)
        s0 = np.sum(w)
        s1 = np.sum(w * du)
        s2 = np.sum(w * du * du)
        det = s0 * s2 - s1 * s1
        if hi - lo < 2 or det <= _DET_TOL * s0 * s0:
            raise BandwidthTooSmallError(
                f"degenerate diagonal window at t={g:.6g} with h={h:.6g}"
            )
        r0 = np.sum(w * ys[lo:hi])
        r1 = np.sum(w * du * ys[lo:hi])
        out[i] = (s2 * r0 - s1 * r1) / det
    return out


def estimate_noise_variance_irregular(
    data: FunctionalDataset, mean: MeanEstimate, cov: CovEstimate, h: float
) -> float:
    """Noise variance on the irregular path.

    Smooths the squared centered observations along the diagonal (these
    include the measurement-error ridge) and averages the excess over the
    fitted surface's diagonal across the interior grid, t in [0.25, 0.75].
    Clamped below at 1e-6 so pseudo-likelihoods stay finite.
    """
    t, y = data.pooled()
    resid2 = (y - mean.at(t)) ** 2
    g = cov.grid.points
    interior = (g >= 0.25) & (g <= 0.75)
    vhat = _local_linear_1d(t, resid2, h, g[interior])
    sigma2 = float(np.mean(vhat - np.diag(cov.matrix)[interior]))
    return max(sigma2, 1e-6)


# ---------------------------------------------------------------------------
# dense regular designs
# ---------------------------------------------------------------------------


def _common_grid(data: FunctionalDataset) -> np.ndarray:
    common = data.common_times()
    if common is None:
        raise DesignMismatchError(
            "subjects do not share a common time vector; use the irregular path"
        )
    return common


def dense_regular_mean(data: FunctionalDataset) -> MeanEstimate:
    """Cross-sectional sample mean on the common time vector."""
    common = _common_grid(data)
    ymat = np.stack([s.values for s in data.subjects])
    grid = EvaluationGrid(common)
    return MeanEstimate(grid=grid, values=ymat.mean(axis=0), bandwidth=None)


def rice_sigma2(data: FunctionalDataset) -> float:
    """First-difference noise-variance estimator on a common regular grid.

    sigma2 = sum_i sum_j (Y_{i,j+1} - Y_{i,j})^2 / (2 n (m - 1)), clamped at 0.
    The smooth-signal contribution to the differences is not corrected for.
    """
    common = _common_grid(data)
    m = len(common)
    if m < 3:
        raise InsufficientGridError(f"need at least 3 points per curve, got {m}")
    ymat = np.stack([s.values for s in data.subjects])
    diffs = np.diff(ymat, axis=1)
    n = ymat.shape[0]
    return max(float(np.sum(diffs**2) / (2.0 * n * (m - 1))), 0.0)


def dense_regular_cov(data: FunctionalDataset, mean: MeanEstimate, sigma2: float) -> CovEstimate:
    """Raw empirical covariance with the noise ridge removed from the diagonal."""
    common = _common_grid(data)
    if len(common) != len(mean.grid) or not np.array_equal(common, mean.grid.points):
        raise DesignMismatchError("mean estimate grid does not match the common time vector")
    ymat = np.stack([s.values for s in data.subjects])
    centered = ymat - mean.values[None, :]
    n = ymat.shape[0]
    raw = centered.T @ centered / n
    mat = raw - sigma2 * np.eye(len(common))
    mat = (mat + mat.T) / 2.0
    return CovEstimate(grid=mean.grid, matrix=mat, bandwidth=None, noise_variance=float(sigma2))
