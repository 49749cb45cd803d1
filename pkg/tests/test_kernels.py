"""The two kernel backends must agree bit-for-bit on the same inputs."""
import numpy as np
import pytest

from protoselect import _kernels
from protoselect.rng import derived_rng


def _pure_python(fn):
    """Unwrap a possibly-jitted kernel to its python implementation."""
    return getattr(fn, "py_func", fn)


def _random_dissimilarity(rng, p, ties=False):
    M = rng.random((p, p))
    D = M + M.T
    np.fill_diagonal(D, 0.0)
    D = np.clip(D, 0.0, 2.0)
    if ties:
        # quantize so equal minima occur and the tie-break is exercised
        D = np.round(D, 1)
    return D


@pytest.mark.parametrize("ties", [False, True])
@pytest.mark.parametrize(
    "method", [_kernels.LINK_COMPLETE, _kernels.LINK_SINGLE, _kernels.LINK_AVERAGE]
)
def test_linkage_backends_agree(method, ties):
    rng = derived_rng(42, 1)
    for trial in range(10):
        D = _random_dissimilarity(rng, p=12, ties=ties)
        loop = _pure_python(_kernels._linkage_impl)(D, method)
        vect = _kernels._linkage_numpy(D, method)
        np.testing.assert_array_equal(loop, vect)


def test_active_kernel_matches_reference_linkage():
    rng = derived_rng(43, 1)
    D = _random_dissimilarity(rng, p=15)
    got = _kernels.linkage_kernel(np.ascontiguousarray(D), _kernels.LINK_COMPLETE)
    want = _pure_python(_kernels._linkage_impl)(D, _kernels.LINK_COMPLETE)
    np.testing.assert_allclose(got, want, rtol=0, atol=0)


def test_cd_lasso_backends_agree():
    rng = derived_rng(44, 1)
    for trial in range(5):
        X = rng.standard_normal((30, 8))
        y = rng.standard_normal(30)
        G = X.T @ X
        xty = X.T @ y
        lam = 0.3 * np.max(np.abs(xty))
        b1 = np.zeros(8)
        b2 = np.zeros(8)
        s1 = _kernels.cd_lasso(G, xty, lam, b1, 1e-9 * lam, 100000)
        s2 = _pure_python(_kernels._cd_lasso_impl)(G, xty, lam, b2, 1e-9 * lam, 100000)
        assert s1 > 0 and s2 > 0
        np.testing.assert_allclose(b1, b2, rtol=0, atol=1e-12)


def test_cd_lasso_reports_nonconvergence():
    rng = derived_rng(45, 1)
    X = rng.standard_normal((20, 5))
    y = rng.standard_normal(20)
    G = X.T @ X
    xty = X.T @ y
    lam = 0.1 * np.max(np.abs(xty))
    beta = np.zeros(5)
    # one sweep cannot converge from a cold start at a small lambda
    sweeps = _kernels.cd_lasso(G, xty, lam, beta, 1e-12 * lam, 1)
    assert sweeps == -1
