"""Light property-based checks for algebraic invariants."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from protoselect.cluster import Clustering, adjusted_rand_index
from protoselect.dataset import standardize
from protoselect.prototest import bh_procedure


@st.composite
def nondegenerate_matrix(draw):
    n = draw(st.integers(5, 20))
    p = draw(st.integers(1, 6))
    X = draw(
        arrays(
            float,
            (n, p),
            elements=st.floats(-50, 50, allow_nan=False),
        )
    )
    # ensure no constant column
    for j in range(p):
        if np.ptp(X[:, j]) < 1e-6:
            X[0, j] += 1.0
    return X


@given(nondegenerate_matrix())
@settings(max_examples=30, deadline=None)
def test_standardize_idempotent(X):
    Z = standardize(X)
    n = X.shape[0]
    assert np.max(np.abs(Z.mean(axis=0))) < 1e-9
    assert np.max(np.abs((Z**2).sum(axis=0) - n)) < 1e-8
    np.testing.assert_allclose(standardize(Z), Z, atol=1e-9)


@st.composite
def label_pair(draw):
    p = draw(st.integers(2, 20))
    la = np.array(draw(st.lists(st.integers(0, 4), min_size=p, max_size=p)))
    lb = np.array(draw(st.lists(st.integers(0, 4), min_size=p, max_size=p)))

    def normalize(raw):
        ids = {v: i + 1 for i, v in enumerate(dict.fromkeys(raw.tolist()))}
        labels = np.array([ids[v] for v in raw])
        return Clustering(labels=labels, K=len(ids))

    return normalize(la), normalize(lb)


@given(label_pair())
@settings(max_examples=50, deadline=None)
def test_ari_symmetric_and_bounded(pair):
    a, b = pair
    ab = adjusted_rand_index(a, b)
    ba = adjusted_rand_index(b, a)
    assert ab == ba
    assert -1.0 <= ab <= 1.0
    assert adjusted_rand_index(a, a) == 1.0


@given(
    st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=40),
    st.floats(0.01, 0.5),
    st.floats(0.01, 0.5),
)
@settings(max_examples=50, deadline=None)
def test_bh_monotone_in_q(pvals, q1, q2):
    p = np.array(pvals)
    lo, hi = sorted((q1, q2))
    r_lo = set(bh_procedure(p, lo).tolist())
    r_hi = set(bh_procedure(p, hi).tolist())
    assert r_lo <= r_hi
