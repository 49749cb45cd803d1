"""Hot numeric kernels: lasso coordinate descent and agglomerative linkage.

Each kernel has a numba @njit implementation and a pure-numpy fallback with
identical semantics. The fallback is selected by setting the environment
variable PROTOSELECT_NUMBA=0 (or automatically if numba is unavailable).
``benchmarks/bench_kernels.py`` compares the two paths.
"""
from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("PROTOSELECT_NUMBA", "1") != "0"

# linkage codes shared by both backends
LINK_COMPLETE = 0
LINK_SINGLE = 1
LINK_AVERAGE = 2


def _cd_lasso_impl(G, xty, lam, beta, tol_change, max_sweeps):
    """Cyclic coordinate descent on the Gram system.

    Minimizes 0.5*||y - X beta||^2 + lam*||beta||_1 given G = X^T X and
    xty = X^T y. beta is updated in place. Returns the number of sweeps
    used, or -1 if the max-abs coefficient change never fell below
    tol_change within max_sweeps.
    """
    p = G.shape[0]
    # c_j tracks x_j^T (y - X beta)
    c = xty - G @ beta
    for sweep in range(max_sweeps):
        max_change = 0.0
        for j in range(p):
            gjj = G[j, j]
            bj = beta[j]
            rho = c[j] + gjj * bj
            if rho > lam:
                bn = (rho - lam) / gjj
            elif rho < -lam:
                bn = (rho + lam) / gjj
            else:
                bn = 0.0
            d = bn - bj
            if d != 0.0:
                c -= G[:, j] * d
                beta[j] = bn
                ad = abs(d)
                if ad > max_change:
                    max_change = ad
        if max_change < tol_change:
            return sweep + 1
    return -1


def _linkage_impl(D, method):
    """Agglomerative merge tree from a dissimilarity matrix.

    Returns a (p-1, 3) array of (left node, right node, height) records with
    leaves 0..p-1 and merge m producing node p+m. Ties on the minimal linkage
    distance break to the lexicographically smallest active pair, so the
    output is fully deterministic.
    """
    p = D.shape[0]
    d = D.copy()
    size = np.ones(p)
    active = np.ones(p, np.bool_)
    node = np.arange(p)
    merges = np.zeros((p - 1, 3))
    for m in range(p - 1):
        best = np.inf
        bi = -1
        bj = -1
        for i in range(p):
            if not active[i]:
                continue
            for j in range(i + 1, p):
                if not active[j]:
                    continue
                if d[i, j] < best:
                    best = d[i, j]
                    bi = i
                    bj = j
        merges[m, 0] = node[bi]
        merges[m, 1] = node[bj]
        merges[m, 2] = best
        # merged cluster lives in slot bi
        for k in range(p):
            if not active[k] or k == bi or k == bj:
                continue
            a = d[bi, k]
            b = d[bj, k]
            if method == LINK_COMPLETE:
                v = a if a > b else b
            elif method == LINK_SINGLE:
                v = a if a < b else b
            else:
                v = (size[bi] * a + size[bj] * b) / (size[bi] + size[bj])
            d[bi, k] = v
            d[k, bi] = v
        active[bj] = False
        size[bi] += size[bj]
        node[bi] = p + m
    return merges


def _linkage_numpy(D, method):
    """Vectorized variant of _linkage_impl for the no-numba path."""
    p = D.shape[0]
    d = D.copy()
    # mask lower triangle and diagonal so flat argmin scans the upper
    # triangle in row-major order, which is the lexicographic tie-break
    d[np.tril_indices(p)] = np.inf
    size = np.ones(p)
    node = np.arange(p)
    merges = np.zeros((p - 1, 3))
    for m in range(p - 1):
        flat = np.argmin(d)
        bi, bj = divmod(flat, p)
        merges[m] = (node[bi], node[bj], d[bi, bj])
        row_i = np.where(np.arange(p) < bi, d[:, bi], d[bi, :])
        row_j = np.where(np.arange(p) < bj, d[:, bj], d[bj, :])
        if method == LINK_COMPLETE:
            new = np.maximum(row_i, row_j)
        elif method == LINK_SINGLE:
            new = np.minimum(row_i, row_j)
        else:
            new = (size[bi] * row_i + size[bj] * row_j) / (size[bi] + size[bj])
        new[bi] = np.inf
        mask = np.arange(p) < bi
        d[:, bi] = np.where(mask, new, np.inf)
        d[bi, :] = np.where(~mask, new, np.inf)
        d[bi, bi] = np.inf
        d[bj, :] = np.inf
        d[:, bj] = np.inf
        size[bi] += size[bj]
        node[bi] = p + m
    return merges


if USE_NUMBA:
    try:
        from numba import njit

        cd_lasso = njit(cache=True)(_cd_lasso_impl)
        linkage_kernel = njit(cache=True)(_linkage_impl)
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - exercised via env flag instead
        cd_lasso = _cd_lasso_impl
        linkage_kernel = _linkage_numpy
        BACKEND = "numpy"
else:
    cd_lasso = _cd_lasso_impl
    linkage_kernel = _linkage_numpy
    BACKEND = "numpy"
