import numpy as np
import pytest
import scipy.cluster.hierarchy as sch
import scipy.spatial.distance as ssd

from protoselect.cluster import (
    Clustering,
    Dissimilarity,
    adjusted_rand_index,
    correlation_dissimilarity,
    cut,
    hclust,
    load_clustering,
    save_clustering,
)
from protoselect.errors import InputError
from protoselect.rng import derived_rng


def _random_diss(rng, p):
    M = rng.random((p, p))
    D = 0.5 * (M + M.T)
    np.fill_diagonal(D, 0.0)
    return Dissimilarity(D=np.clip(D, 0, 2))


@pytest.mark.parametrize("linkage", ["complete", "single", "average"])
def test_hclust_matches_scipy(linkage):
    # tie-free random dissimilarities: merge heights and cut partitions must
    # match the reference implementation exactly
    rng = derived_rng(10, 2)
    for trial in range(5):
        diss = _random_diss(rng, p=14)
        dend = hclust(diss, linkage)
        Z = sch.linkage(ssd.squareform(diss.D, checks=False), method=linkage)
        np.testing.assert_allclose(np.sort(dend.merges[:, 2]), np.sort(Z[:, 2]), rtol=1e-12)
        for K in (2, 3, 5):
            ours = cut(dend, K)
            ref_labels = sch.fcluster(Z, t=K, criterion="maxclust")
            ids = {v: i + 1 for i, v in enumerate(dict.fromkeys(ref_labels))}
            ref = Clustering(labels=np.array([ids[v] for v in ref_labels]), K=K)
            assert adjusted_rand_index(ours, ref) == pytest.approx(1.0)


def test_correlation_dissimilarity_values():
    rng = derived_rng(11, 2)
    x = rng.standard_normal(50)
    X = np.column_stack([x, 2 * x + 1, -x, rng.standard_normal(50)])
    D = correlation_dissimilarity(X).D
    assert D[0, 1] == pytest.approx(0.0, abs=1e-12)  # perfectly correlated
    assert D[0, 2] == pytest.approx(2.0, abs=1e-12)  # perfectly anticorrelated
    assert 0 < D[0, 3] < 2


def test_correlation_dissimilarity_rejects_constant():
    X = np.ones((10, 2))
    X[:, 0] = np.arange(10)
    with pytest.raises(InputError):
        correlation_dissimilarity(X)


def test_cut_labels_ordered_by_smallest_member():
    # two clear blocks: features 0-2 correlated, 3-5 correlated
    rng = derived_rng(12, 2)
    base1 = rng.standard_normal(100)
    base2 = rng.standard_normal(100)
    X = np.column_stack(
        [base1 + 0.1 * rng.standard_normal(100) for _ in range(3)]
        + [base2 + 0.1 * rng.standard_normal(100) for _ in range(3)]
    )
    cl = cut(hclust(correlation_dissimilarity(X)), 2)
    np.testing.assert_array_equal(cl.labels, [1, 1, 1, 2, 2, 2])


def test_ari_hand_values():
    a = Clustering(labels=np.array([1, 1, 2, 2]), K=2)
    b = Clustering(labels=np.array([1, 2, 1, 2]), K=2)
    # contingency all-ones: nij=0, ai=bj=2, expected=2/3, max=2 -> -0.5
    assert adjusted_rand_index(a, b) == pytest.approx(-0.5)
    assert adjusted_rand_index(a, a) == pytest.approx(1.0)
    # label permutation is irrelevant
    c = Clustering(labels=np.array([2, 2, 1, 1]), K=2)
    assert adjusted_rand_index(a, c) == pytest.approx(1.0)


def test_ari_trivial_partitions():
    one = Clustering(labels=np.ones(5, dtype=int), K=1)
    assert adjusted_rand_index(one, one) == pytest.approx(1.0)


def test_clustering_validation():
    with pytest.raises(InputError):
        Clustering(labels=np.array([1, 3]), K=3)  # id 2 unused


def test_save_load_roundtrip(tmp_path):
    cl = Clustering(labels=np.array([1, 2, 1, 3, 2]), K=3)
    names = ["a", "b", "c", "d", "e"]
    path = tmp_path / "cl.csv"
    save_clustering(str(path), cl, names)
    back = load_clustering(str(path), names)
    np.testing.assert_array_equal(back.labels, cl.labels)
    assert back.K == 3


def test_cut_bounds():
    rng = derived_rng(13, 2)
    dend = hclust(_random_diss(rng, 6))
    with pytest.raises(InputError):
        cut(dend, 0)
    with pytest.raises(InputError):
        cut(dend, 7)
    assert cut(dend, 6).K == 6
    assert cut(dend, 1).K == 1
