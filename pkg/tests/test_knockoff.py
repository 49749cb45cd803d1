import numpy as np
import pytest

from protoselect.cluster import Clustering
from protoselect.dataset import (
    BlockDesignSpec,
    Dataset,
    generate_block_design,
    generate_response,
    standardize,
)
from protoselect.errors import InputError, NumericalError
from protoselect.knockoff import (
    KnockoffRun,
    fdp_power,
    knockoff_statistics,
    knockoff_threshold,
    make_knockoffs,
    run_knockoff_protolasso,
    screen_prototypes,
)
from protoselect.proto import PrototypeSet, extract_prototypes
from protoselect.rng import derived_rng


def test_gram_identities_wide_margin():
    rng = derived_rng(60, 7)
    X = standardize(rng.standard_normal((40, 8)))
    knock = make_knockoffs(X)
    assert knock.rows_added == 0
    G = X.T @ X
    np.testing.assert_allclose(knock.x_tilde.T @ knock.x_tilde, G, atol=1e-8)
    np.testing.assert_allclose(X.T @ knock.x_tilde, G - np.diag(knock.s), atol=1e-8)
    assert np.all(knock.s > 0)


def test_gram_identities_with_row_augmentation():
    rng = derived_rng(61, 7)
    X = standardize(rng.standard_normal((12, 8)))  # n < 2p triggers padding
    knock = make_knockoffs(X)
    assert knock.rows_added == 4
    Xa = np.vstack([X, np.zeros((4, 8))])
    G = Xa.T @ Xa
    np.testing.assert_allclose(knock.x_tilde.T @ knock.x_tilde, G, atol=1e-8)
    np.testing.assert_allclose(Xa.T @ knock.x_tilde, G - np.diag(knock.s), atol=1e-8)


def test_make_knockoffs_rejects_unstandardized_and_singular():
    rng = derived_rng(62, 7)
    X = rng.standard_normal((20, 4)) * np.array([1.0, 2.0, 1.0, 1.0])
    with pytest.raises(InputError, match="common norm"):
        make_knockoffs(X)
    Z = standardize(rng.standard_normal((20, 3)))
    dup = np.column_stack([Z, Z[:, 0]])  # exactly collinear
    with pytest.raises(NumericalError):
        make_knockoffs(dup)


def test_threshold_hand_example():
    W = np.array([3.0, -1.0, 2.0, -2.0, 5.0])
    # t=1: (1+2)/3=1.0; t=2: (1+1)/3=0.67; t=3: (1+0)/2=0.5 <= q -> T=3
    assert knockoff_threshold(W, 0.5) == 3.0
    assert knockoff_threshold(W, 0.4) == np.inf
    with pytest.raises(InputError):
        knockoff_threshold(W, 0.0)


def test_threshold_all_negative():
    assert knockoff_threshold(np.array([-1.0, -2.0]), 0.9) == np.inf


def test_statistics_antisymmetry():
    # swapping the original and knockoff blocks negates every W
    rng = derived_rng(63, 7)
    X = standardize(rng.standard_normal((50, 5)))
    knock = make_knockoffs(X)
    y = rng.standard_normal(50)
    W = knockoff_statistics(X, knock.x_tilde, y)
    W_swap = knockoff_statistics(knock.x_tilde, X, y)
    np.testing.assert_allclose(W, -W_swap, atol=1e-12)


def test_statistics_signal_columns_win():
    rng = derived_rng(64, 7)
    X = standardize(rng.standard_normal((100, 6)))
    knock = make_knockoffs(X)
    beta = np.array([4.0, 4.0, 0, 0, 0, 0])
    y = generate_response(X, beta, 1.0, seed=1)
    W = knockoff_statistics(X, knock.x_tilde, y)
    assert W[0] > 0 and W[1] > 0
    assert np.min(W[:2]) > np.max(np.abs(W[2:]))


def test_fdp_power_hand_case():
    labels = np.array([1, 1, 2, 2, 3, 3])
    cl = Clustering(labels=labels, K=3)
    beta = np.array([1.0, 0, 0, 0, 0, 0])  # cluster 1 is the only signal
    protoset = PrototypeSet(prototypes=np.array([0, 2, 4]), signs=np.ones(3, dtype=int))
    run = KnockoffRun(
        protoset=protoset,
        W=np.array([3.0, 2.0, -1.0]),
        threshold=2.0,
        selected=np.array([0, 2]),
        q=0.5,
    )
    fdp, power = fdp_power(run, cl, beta)
    assert fdp == pytest.approx(0.5)  # feature 2 is a null cluster's prototype
    assert power == pytest.approx(1.0)


def test_run_knockoff_protolasso_deterministic():
    spec = BlockDesignSpec(n=200, block_sizes=(5, 5, 5, 5), rho=0.5, seed=2)
    X = generate_block_design(spec)
    beta = np.zeros(20)
    beta[[0, 5]] = 4.0
    y = generate_response(X, beta, 1.0, seed=2)
    ds = Dataset(X=X, y=y, sigma=1.0, standardized=True)
    cl = Clustering(labels=np.repeat(np.arange(1, 5), 5), K=4)
    r1 = run_knockoff_protolasso(ds, cl, q=0.5, seed=9)
    r2 = run_knockoff_protolasso(ds, cl, q=0.5, seed=9)
    np.testing.assert_array_equal(r1.W, r2.W)
    np.testing.assert_array_equal(r1.selected, r2.selected)
    with pytest.raises(InputError):
        run_knockoff_protolasso(ds, cl, q=0.5, split="thirds")


def test_screen_prototypes_reuses_knockoffs():
    rng = derived_rng(65, 7)
    X2 = standardize(rng.standard_normal((80, 6)))
    y2 = rng.standard_normal(80)
    cl = Clustering(labels=np.array([1, 1, 2, 2, 3, 3]), K=3)
    protoset = extract_prototypes(X2, y2, cl)
    knock = make_knockoffs(X2)
    a = screen_prototypes(X2, y2, protoset, q=0.5, knock=knock)
    b = screen_prototypes(X2, y2, protoset, q=0.5)
    np.testing.assert_allclose(a.W, b.W, atol=1e-12)
