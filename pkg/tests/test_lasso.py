import numpy as np
import pytest

from protoselect.dataset import standardize
from protoselect.errors import InputError, NumericalError
from protoselect.lasso import (
    cv_lambda,
    entry_values,
    fit_lasso,
    lambda_for_size,
    lambda_max,
    lasso_constraints,
)
from protoselect.rng import derived_rng

cvxpy = pytest.importorskip("cvxpy")


def _objective(X, y, beta, lam):
    return 0.5 * np.sum((y - X @ beta) ** 2) + lam * np.sum(np.abs(beta))


def _cvxpy_lasso(X, y, lam):
    beta = cvxpy.Variable(X.shape[1])
    obj = 0.5 * cvxpy.sum_squares(y - X @ beta) + lam * cvxpy.norm1(beta)
    cvxpy.Problem(cvxpy.Minimize(obj)).solve(solver="CLARABEL")
    return np.asarray(beta.value).ravel()


def test_objective_matches_convex_oracle():
    rng = derived_rng(40, 5)
    for trial in range(5):
        X = standardize(rng.standard_normal((25, 6)))
        y = rng.standard_normal(25)
        lam = 0.3 * lambda_max(X, y)
        fit = fit_lasso(X, y, lam)
        ref = _cvxpy_lasso(X, y, lam)
        assert _objective(X, y, fit.beta, lam) <= _objective(X, y, ref, lam) + 1e-8


def test_kkt_certificate_holds():
    rng = derived_rng(41, 5)
    X = standardize(rng.standard_normal((30, 8)))
    y = rng.standard_normal(30)
    lam = 0.2 * lambda_max(X, y)
    fit = fit_lasso(X, y, lam)
    r = y - X @ fit.beta
    grads = X.T @ r
    for j in range(8):
        if fit.beta[j] != 0:
            assert abs(grads[j] - lam * np.sign(fit.beta[j])) <= fit.tol * lam
        else:
            assert abs(grads[j]) <= lam * (1 + fit.tol)


def test_lambda_max_kills_everything():
    rng = derived_rng(42, 5)
    X = standardize(rng.standard_normal((20, 5)))
    y = rng.standard_normal(20)
    lmax = lambda_max(X, y)
    assert fit_lasso(X, y, lmax * 1.0001).active.size == 0
    assert fit_lasso(X, y, lmax * 0.99).active.size >= 1


def test_entry_values_definition():
    # Z_j is the largest penalty keeping j active: the column must be active
    # when fitting at Z_j and inactive one grid-refinement step above it
    rng = derived_rng(43, 5)
    X = standardize(rng.standard_normal((30, 6)))
    y = X[:, 0] * 2 + rng.standard_normal(30)
    ev = entry_values(X, y)
    ratio = (1000.0) ** (1.0 / 99.0)  # adjacent grid spacing
    for j in range(6):
        if ev.Z[j] == 0:
            continue
        assert fit_lasso(X, y, ev.Z[j]).beta[j] != 0
        assert fit_lasso(X, y, ev.Z[j] * ratio).beta[j] == 0
    # the first entrant's value sits within one refinement step of lambda_max
    lmax = lambda_max(X, y)
    assert lmax / ratio <= ev.Z.max() <= lmax


def test_entry_values_zero_response():
    rng = derived_rng(44, 5)
    X = standardize(rng.standard_normal((10, 3)))
    ev = entry_values(X, np.zeros(10))
    np.testing.assert_array_equal(ev.Z, 0.0)


def test_cv_lambda_on_grid_and_deterministic():
    rng = derived_rng(45, 5)
    X = standardize(rng.standard_normal((40, 5)))
    y = X[:, 0] + 0.5 * rng.standard_normal(40)
    lam1 = cv_lambda(X, y, seed=3)
    lam2 = cv_lambda(X, y, seed=3)
    assert lam1 == lam2
    grid = entry_values(X, y).grid
    assert np.min(np.abs(grid - lam1)) == 0.0


def test_lambda_for_size_exact():
    rng = derived_rng(46, 5)
    X = standardize(rng.standard_normal((40, 8)))
    y = X @ np.array([3.0, -2.0, 1.5, 0, 0, 0, 0, 0]) + 0.3 * rng.standard_normal(40)
    for m in (1, 2, 3):
        lam = lambda_for_size(X, y, m)
        assert fit_lasso(X, y, lam).active.size == m
    with pytest.raises(InputError):
        lambda_for_size(X, y, 0)


def test_lasso_polyhedron_membership_equivalence():
    # y' lies in the selection polyhedron exactly when the lasso at the same
    # penalty reproduces the conditioned active set and signs
    rng = derived_rng(47, 5)
    X = standardize(rng.standard_normal((12, 5)))
    y = rng.standard_normal(12)
    lam = 0.45 * lambda_max(X, y)
    fit = fit_lasso(X, y, lam)
    poly = lasso_constraints(X, fit.active, fit.signs, lam)
    assert poly.contains(y)
    for _ in range(400):
        yp = rng.standard_normal(12)
        refit = fit_lasso(X, yp, lam)
        same = np.array_equal(refit.active, fit.active) and np.array_equal(
            refit.signs, fit.signs
        )
        # skip draws within certification noise of the polyhedron boundary
        margin = np.min(poly.b - poly.A @ yp)
        if abs(margin) < 1e-6:
            continue
        assert poly.contains(yp, slack=0.0) == same


def test_lasso_polyhedron_empty_active_set():
    rng = derived_rng(48, 5)
    X = standardize(rng.standard_normal((10, 4)))
    y = rng.standard_normal(10)
    lam = lambda_max(X, y) * 2
    poly = lasso_constraints(X, np.array([], dtype=int), np.array([]), lam)
    assert poly.m == 8
    assert poly.contains(y)
    # scaling y past lambda_max must exit the region
    assert not poly.contains(y * 3.0)


def test_fit_lasso_rejects_bad_lambda():
    with pytest.raises(InputError):
        fit_lasso(np.eye(3), np.zeros(3), 0.0)
