"""Exact windowed monomial sums for the bivariate local linear smoother.

The product Epanechnikov kernel vanishes outside the square window
[s-h, s+h] x [t-h, t+h] and is polynomial inside it, so every kernel-weighted
design moment at an evaluation point is a linear combination of plain monomial
sums u^a v^b (optionally r-weighted) over the points inside the window.  Those
windowed sums are computed exactly for all evaluation points at once with an
offline dominance sweep: points and the four window corners of every query are
processed in u-order while a Fenwick tree over v-ranks accumulates the
monomial payload.  Cost is O((n_points + n_queries) log n_points) per
bandwidth, independent of the window size.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# plain monomials u^a v^b needed by the 3x3 design matrix (degree <= 2 per
# axis after kernel expansion adds 2), and r-weighted monomials for the
# right-hand side (degree <= 1 per axis before expansion)
PLAIN_MONOMIALS = tuple(
    (a, b)
    for a in range(5)
    for b in range(5)
    if (a <= 4 and b <= 2) or (a <= 3 and b <= 3) or (a <= 2 and b <= 4)
)
RHS_MONOMIALS = tuple(
    (a, b) for a in range(4) for b in range(4) if (a <= 3 and b <= 2) or (a <= 2 and b <= 3)
)
N_COLS = len(PLAIN_MONOMIALS) + len(RHS_MONOMIALS)
PLAIN_INDEX = {ab: k for k, ab in enumerate(PLAIN_MONOMIALS)}
RHS_INDEX = {ab: k + len(PLAIN_MONOMIALS) for k, ab in enumerate(RHS_MONOMIALS)}


def build_payload(u: np.ndarray, v: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Monomial payload matrix, one row per raw pair.  Bandwidth independent."""
    n = u.shape[0]
    out = np.empty((n, N_COLS))
    upow = np.ones((5, n))
    vpow = np.ones((5, n))
    for k in range(1, 5):
        upow[k] = upow[k - 1] * u
        vpow[k] = vpow[k - 1] * v
    for (a, b), col in PLAIN_INDEX.items():
        out[:, col] = upow[a] * vpow[b]
    for (a, b), col in RHS_INDEX.items():
        out[:, col] = upow[a] * vpow[b] * r
    return out


@njit(cache=True)
def _sweep(u_sorted, vrank_sorted, payload_sorted, qx, qyrank, qsign, qeval, nv, out):
    npts = u_sorted.shape[0]
    ncol = payload_sorted.shape[1]
    tree = np.zeros((nv + 1, ncol))
    i = 0
    for qi in range(qx.shape[0]):
        x = qx[qi]
        while i < npts and u_sorted[i] <= x:
            node = vrank_sorted[i] + 1
            while node <= nv:
                for c in range(ncol):
                    tree[node, c] += payload_sorted[i, c]
                node += node & (-node)
            i += 1
        node = qyrank[qi]
        if node > 0:
            e = qeval[qi]
            s = qsign[qi]
            while node > 0:
                for c in range(ncol):
                    out[e, c] += s * tree[node, c]
                node -= node & (-node)


class PairIndex:
    """Sorted view of the raw pairs, reusable across bandwidth candidates."""

    def __init__(self, u: np.ndarray, v: np.ndarray, r: np.ndarray):
        order = np.argsort(u, kind="stable")
        self.u_sorted = np.ascontiguousarray(u[order])
        v_sorted = v[order]
        self.payload_sorted = np.ascontiguousarray(build_payload(self.u_sorted, v_sorted, r[order]))
        self.v_unique = np.unique(v)
        self.vrank_sorted = np.searchsorted(self.v_unique, v_sorted).astype(np.int64)
        self.n = u.shape[0]

    def windowed_sums(self, ev_u: np.ndarray, ev_v: np.ndarray, h: float) -> np.ndarray:
        """Exact sums of every payload column over each window [ev+-h]^2."""
        ne = ev_u.shape[0]
        nv = self.v_unique.shape[0]
        x = np.concatenate([ev_u + h, ev_u - h, ev_u + h, ev_u - h])
        sign = np.concatenate([np.ones(ne), -np.ones(ne), -np.ones(ne), np.ones(ne)])
        # upper corners include v == ev+h, lower corners exclude v < ev-h only;
        # boundary points carry zero kernel weight either way
        hi = np.searchsorted(self.v_unique, ev_v + h, side="right").astype(np.int64)
        lo = np.searchsorted(self.v_unique, ev_v - h, side="left").astype(np.int64)
        yrank = np.concatenate([hi, hi, lo, lo])
        evid = np.tile(np.arange(ne, dtype=np.int64), 4)
        qorder = np.argsort(x, kind="stable")
        out = np.zeros((ne, N_COLS))
        _sweep(
            self.u_sorted,
            self.vrank_sorted,
            self.payload_sorted,
            np.ascontiguousarray(x[qorder]),
            np.ascontiguousarray(yrank[qorder]),
            np.ascontiguousarray(sign[qorder]),
            np.ascontiguousarray(evid[qorder]),
            nv,
            out,
        )
        return out


def design_moments(sums: np.ndarray, ev_u: np.ndarray, ev_v: np.ndarray, h: float):
    """Kernel-weighted design moments from windowed monomial sums.

    Returns (S, T): S has columns S00, S10, S01, S20, S11, S02 and T has
    columns T00, T10, T01, where
    S_ij = sum_w K((u-s)/h) K((v-t)/h) ((u-s)/h)^i ((v-t)/h)^j and T_ij adds
    an r factor.  Slopes are scaled by h, which leaves the intercept alone.
    """
    ne = ev_u.shape[0]

    def axis_coeffs(ev):
        # A_i(x; e) = K((x-e)/h) ((x-e)/h)^i expanded in powers of x:
        # coef[i][j] multiplies x^j, for j = 0..i+2
        binom = [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1], [1, 4, 6, 4, 1]]
        neg = np.empty((5, ne))
        neg[0] = 1.0
        for k in range(1, 5):
            neg[k] = neg[k - 1] * (-ev)
        coefs = []
        for i in range(3):
            ci = np.zeros((i + 3, ne))
            for j in range(i + 1):
                ci[j] += binom[i][j] * neg[i - j] / h**i
            for j in range(i + 3):
                ci[j] -= binom[i + 2][j] * neg[i + 2 - j] / h ** (i + 2)
            coefs.append(0.75 * ci)
        return coefs

    au = axis_coeffs(ev_u)
    bv = axis_coeffs(ev_v)

    def combine(i, j, index):
        acc = np.zeros(ne)
        for a in range(i + 3):
            ca = au[i][a]
            for b in range(j + 3):
                acc += ca * bv[j][b] * sums[:, index[(a, b)]]
        return acc

    S = np.stack(
        [
            combine(0, 0, PLAIN_INDEX),
            combine(1, 0, PLAIN_INDEX),
            combine(0, 1, PLAIN_INDEX),
            combine(2, 0, PLAIN_INDEX),
            combine(1, 1, PLAIN_INDEX),
            combine(0, 2, PLAIN_INDEX),
        ],
        axis=1,
    )
    T = np.stack(
        [
            combine(0, 0, RHS_INDEX),
            combine(1, 0, RHS_INDEX),
            combine(0, 1, RHS_INDEX),
        ],
        axis=1,
    )
    return S, T


def counts_in_windows(sums: np.ndarray) -> np.ndarray:
    """Number of raw pairs inside each window (the u^0 v^0 column)."""
    return sums[:, PLAIN_INDEX[(0, 0)]]


def solve_local_plane(S: np.ndarray, T: np.ndarray):
    """Solve the 3x3 weighted normal equations per evaluation point.

    Returns (fitted, det_rel, cof, det): the local intercepts, a scale-free
    degeneracy measure, the first cofactor row of the moment matrix (which
    gives the intercept's weight on any observation), and the determinant.
    """
    s00, s10, s01, s20, s11, s02 = (S[:, k] for k in range(6))
    c00 = s20 * s02 - s11 * s11
    c01 = s01 * s11 - s10 * s02
    c02 = s10 * s11 - s01 * s20
    det = s00 * c00 + s10 * c01 + s01 * c02
    det_rel = np.where(s00 > 0, det / np.maximum(s00**3, 1e-100), 0.0)
    safe = np.where(np.abs(det) > 0, det, 1.0)
    fitted = (c00 * T[:, 0] + c01 * T[:, 1] + c02 * T[:, 2]) / safe
    return fitted, det_rel, np.stack([c00, c01, c02], axis=1), det
