"""Lasso solver, entry values along the regularization path, CV, and the
lasso selection polyhedron.

Objective convention throughout: 0.5 * ||y - X beta||^2 + lambda * ||beta||_1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InputError, NumericalError
from .proto import TAG_LASSO, Polyhedron, empty_polyhedron
from .rng import derived_rng

MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class LassoFit:
    """KKT-certified lasso solution on the supplied columns."""

    beta: np.ndarray
    lam: float
    active: np.ndarray  # ordered positions (into the supplied columns)
    signs: np.ndarray  # signs of the active coefficients
    tol: float


@dataclass(frozen=True)
class EntryValues:
    """Z_j = largest lambda at which column j is active on the path
    (0 if never active on the searched grid)."""

    Z: np.ndarray
    grid: np.ndarray


def fit_lasso(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    tol: float = 1e-6,
    beta0: np.ndarray | None = None,
) -> LassoFit:
    """Cyclic coordinate descent, converged when the max-abs coefficient
    change in a sweep falls below 1e-9 * lambda."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if lam <= 0:
        raise InputError("lambda must be positive")
    G = X.T @ X
    xty = X.T @ y
    beta = np.zeros(X.shape[1]) if beta0 is None else beta0.astype(float).copy()
    sweeps = _kernels.cd_lasso(G, xty, lam, beta, 1e-9 * lam, MAX_SWEEPS)
    resid_corr = xty - G @ beta
    if sweeps < 0:
        kkt = _kkt_residual(resid_corr, beta, lam)
        raise NumericalError(
            f"lasso did not converge in {MAX_SWEEPS} sweeps (KKT residual {kkt:.3e})"
        )
    _certify_kkt(resid_corr, beta, lam, tol)
    active = np.where(beta != 0)[0]
    return LassoFit(
        beta=beta,
        lam=float(lam),
        active=active,
        signs=np.sign(beta[active]).astype(int),
        tol=tol,
    )


def _kkt_residual(resid_corr, beta, lam):
    active = beta != 0
    res = 0.0
    if active.any():
        res = np.max(np.abs(resid_corr[active] - lam * np.sign(beta[active])))
    if (~active).any():
        res = max(res, max(0.0, np.max(np.abs(resid_corr[~active])) - lam))
    return res


def _certify_kkt(resid_corr, beta, lam, tol):
    active = beta != 0
    if active.any():
        gap = np.max(np.abs(resid_corr[active] - lam * np.sign(beta[active])))
        if gap > tol * lam:
            raise NumericalError(f"KKT stationarity violated: {gap:.3e} > {tol * lam:.3e}")
    if (~active).any():
        worst = np.max(np.abs(resid_corr[~active]))
        if worst > lam * (1 + tol):
            raise NumericalError(f"KKT inactive bound violated: {worst:.3e}")


def lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(X).T @ np.asarray(y))))


def entry_values(X: np.ndarray, y: np.ndarray, grid_size: int = 100) -> EntryValues:
    """Largest lambda at which each column enters the path.

    Log-spaced grid from lambda_max down to lambda_max / 1000, warm-started
    downwards, with one bisection refinement between adjacent grid points.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if grid_size < 2:
        raise InputError("grid_size must be at least 2")
    p = X.shape[1]
    lmax = lambda_max(X, y)
    if lmax == 0:
        return EntryValues(Z=np.zeros(p), grid=np.array([]))
    grid = np.geomspace(lmax, lmax / 1000.0, grid_size)
    Z = np.zeros(p)
    entry_idx = np.full(p, -1)
    beta = np.zeros(p)
    for i, lam in enumerate(grid):
        beta = fit_lasso(X, y, lam, beta0=beta).beta.copy()
        newly = (beta != 0) & (entry_idx < 0)
        entry_idx[newly] = i
        Z[newly] = lam
    # one bisection level: geometric midpoint between the entry grid point
    # and the previous (larger) one
    for i in range(1, grid_size):
        cols = np.where(entry_idx == i)[0]
        if cols.size == 0:
            continue
        mid = float(np.sqrt(grid[i - 1] * grid[i]))
        beta_mid = fit_lasso(X, y, mid).beta
        for j in cols:
            if beta_mid[j] != 0:
                Z[j] = mid
    return EntryValues(Z=Z, grid=grid)


def cv_lambda(X: np.ndarray, y: np.ndarray, folds: int = 10, seed: int = 0) -> float:
    """Lambda on the entry-value grid minimizing mean held-out squared error;
    ties go to the larger lambda."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < folds:
        raise InputError(f"need at least {folds} rows for {folds}-fold CV")
    grid = entry_values(X, y).grid
    if grid.size == 0:
        raise NumericalError("response is orthogonal to every column; no path")
    rng = derived_rng(seed, 404)
    assign = rng.permutation(n) % folds
    errors = np.zeros(grid.size)
    for f in range(folds):
        test = assign == f
        Xtr, ytr = X[~test], y[~test]
        Xte, yte = X[test], y[test]
        beta = np.zeros(X.shape[1])
        for i, lam in enumerate(grid):
            beta = fit_lasso(Xtr, ytr, lam, beta0=beta).beta.copy()
            errors[i] += float(np.sum((yte - Xte @ beta) ** 2))
    errors /= n
    # grid is descending, so the first argmin is the largest tied lambda
    return float(grid[int(np.argmin(errors))])


def lambda_for_size(
    X: np.ndarray, y: np.ndarray, m: int, grid_size: int = 300
) -> float:
    """Lambda whose lasso active set has exactly m columns.

    Walks a warm-started geometric path downward from lambda_max; if the size
    jumps past m between adjacent grid points, bisects that bracket. Raises
    if size m is never attained on the searched path.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    p = X.shape[1]
    if not 0 < m <= p:
        raise InputError(f"target size must lie in 1..{p}")
    lmax = lambda_max(X, y)
    if lmax == 0:
        raise NumericalError("response is orthogonal to every column; no path")
    grid = np.geomspace(lmax, lmax / 5000.0, grid_size)
    beta = np.zeros(p)
    prev_lam, prev_size = float(grid[0]), 0
    for lam in grid:
        beta = fit_lasso(X, y, lam, beta0=beta).beta.copy()
        size = int(np.sum(beta != 0))
        if size == m:
            return float(lam)
        if prev_size < m < size:
            # the path skipped size m between prev_lam and lam: bisect
            lo_b, hi_b = float(lam), prev_lam
            for _ in range(60):
                mid = float(np.sqrt(lo_b * hi_b))
                msize = fit_lasso(X, y, mid).active.size
                if msize == m:
                    return mid
                if msize > m:
                    lo_b = mid
                else:
                    hi_b = mid
            # genuinely skipped (simultaneous entries); keep walking the path
        prev_lam, prev_size = float(lam), size
    raise NumericalError(f"could not tune lambda to active-set size {m}")


def lasso_constraints(
    X_P: np.ndarray, M: np.ndarray, s2: np.ndarray, lam: float
) -> Polyhedron:
    """Selection event of the lasso at fixed lambda on the supplied columns,
    conditioning on the active positions M and their signs s2.

    Rows: +-(1/lam) X_{P\\M}^T (I - Q_M) with b = 1 -+ X_{P\\M}^T (X_M^T)^+ s2,
    and -diag(s2) (X_M^T X_M)^{-1} X_M^T with b = -lam diag(s2)(X_M^T X_M)^{-1} s2,
    where Q_M projects onto the span of the active columns.
    """
    X_P = np.asarray(X_P, dtype=float)
    M = np.asarray(M, dtype=int)
    s2 = np.asarray(s2, dtype=float)
    n, p = X_P.shape
    if M.size == 0:
        # empty active set: every column stays inactive, |x_j^T y| <= lam
        A = np.vstack([X_P.T, -X_P.T]) / lam
        b = np.ones(2 * p)
        return Polyhedron(A=A, b=b, row_tags=[TAG_LASSO] * (2 * p))
    X_M = X_P[:, M]
    gram = X_M.T @ X_M
    if np.linalg.matrix_rank(gram) < M.size:
        raise NumericalError("active columns are numerically rank deficient")
    gram_inv = np.linalg.inv(gram)
    pinv_t = X_M @ gram_inv  # (X_M^T)^+
    inactive = np.setdiff1d(np.arange(p), M)
    rows = []
    bs = []
    if inactive.size:
        X_I = X_P[:, inactive]
        Q = X_M @ gram_inv @ X_M.T
        proj = X_I.T @ (np.eye(n) - Q) / lam
        offset = X_I.T @ pinv_t @ s2
        rows.append(proj)
        bs.append(np.ones(inactive.size) - offset)
        rows.append(-proj)
        bs.append(np.ones(inactive.size) + offset)
    rows.append(-(s2[:, None] * (gram_inv @ X_M.T)))
    bs.append(-lam * s2 * (gram_inv @ s2))
    A = np.vstack(rows)
    b = np.concatenate(bs)
    return Polyhedron(A=A, b=b, row_tags=[TAG_LASSO] * A.shape[0])
