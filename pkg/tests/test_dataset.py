import numpy as np
import pytest

from protoselect.dataset import (
    BlockDesignSpec,
    Dataset,
    generate_block_design,
    generate_response,
    least_squares_sigma,
    load_csv,
    load_feature_csv,
    standardize,
    standardize_dataset,
)
from protoselect.errors import InputError, NumericalError
from protoselect.rng import derived_rng


def test_standardize_moments():
    rng = derived_rng(1, 9)
    X = rng.standard_normal((40, 7)) * 3.0 + 5.0
    Z = standardize(X)
    n = X.shape[0]
    np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose((Z**2).sum(axis=0), n, rtol=1e-12)


def test_standardize_idempotent():
    rng = derived_rng(2, 9)
    X = rng.standard_normal((25, 4))
    Z = standardize(X)
    np.testing.assert_allclose(standardize(Z), Z, atol=1e-12)


def test_standardize_rejects_constant_column():
    X = np.ones((10, 3))
    X[:, 0] = np.arange(10)
    X[:, 2] = np.arange(10) ** 2
    with pytest.raises(InputError, match="index 1"):
        standardize(X)


def test_block_design_correlation_structure():
    spec = BlockDesignSpec(n=5000, block_sizes=(4, 4), rho=0.5, seed=0)
    X = generate_block_design(spec)
    C = np.corrcoef(X, rowvar=False)
    within = C[0, 1], C[1, 2], C[4, 5]
    across = C[0, 4], C[3, 7]
    for c in within:
        assert abs(c - 0.5) < 0.06
    for c in across:
        assert abs(c) < 0.06


def test_block_design_deterministic():
    spec = BlockDesignSpec(n=30, block_sizes=(3, 3), rho=0.4, seed=11)
    np.testing.assert_array_equal(
        generate_block_design(spec), generate_block_design(spec)
    )


def test_generate_response_noiseless_and_seeded():
    rng = derived_rng(3, 9)
    X = standardize(rng.standard_normal((20, 5)))
    beta = np.array([1.0, 0, 0, -2.0, 0])
    np.testing.assert_array_equal(generate_response(X, beta, 0.0, seed=0), X @ beta)
    y1 = generate_response(X, beta, 1.0, seed=5)
    y2 = generate_response(X, beta, 1.0, seed=5)
    y3 = generate_response(X, beta, 1.0, seed=6)
    np.testing.assert_array_equal(y1, y2)
    assert not np.array_equal(y1, y3)


def test_least_squares_sigma_noiseless_is_zero():
    rng = derived_rng(4, 9)
    X = standardize(rng.standard_normal((30, 4)))
    y = X @ np.array([1.0, -1.0, 0.5, 0.0])
    assert least_squares_sigma(X, y) < 1e-10


def test_least_squares_sigma_needs_overdetermined():
    rng = derived_rng(5, 9)
    X = rng.standard_normal((5, 8))
    with pytest.raises(NumericalError):
        least_squares_sigma(X, np.zeros(5))


def test_dataset_validation():
    X = np.zeros((5, 2))
    with pytest.raises(InputError):
        Dataset(X=X, y=np.zeros(4))
    with pytest.raises(InputError):
        Dataset(X=X, y=np.full(5, np.nan))
    with pytest.raises(InputError):
        Dataset(X=X, y=np.zeros(5), sigma=-1.0)
    # standardized flag must be backed by actually standardized columns
    with pytest.raises(InputError):
        Dataset(X=np.arange(10.0).reshape(5, 2), y=np.zeros(5), standardized=True)


def test_standardize_dataset_centers_response():
    rng = derived_rng(6, 9)
    ds = Dataset(X=rng.standard_normal((20, 3)), y=rng.standard_normal(20) + 4.0)
    out = standardize_dataset(ds)
    assert out.standardized
    assert abs(out.y.mean()) < 1e-12
    np.testing.assert_allclose(out.y_offset, ds.y.mean())


def _write_csv(path, X, y=None, names=None):
    import csv

    names = names or [f"f{j}" for j in range(X.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if y is not None:
            w.writerow(names + ["resp"])
            for i in range(X.shape[0]):
                w.writerow(list(X[i]) + [y[i]])
        else:
            w.writerow(names)
            for row in X:
                w.writerow(list(row))


def test_load_csv_roundtrip(tmp_path):
    rng = derived_rng(7, 9)
    X = rng.standard_normal((12, 3))
    y = rng.standard_normal(12)
    path = tmp_path / "d.csv"
    _write_csv(path, X, y)
    ds = load_csv(str(path), response="resp")
    np.testing.assert_allclose(ds.X, X)
    np.testing.assert_allclose(ds.y, y)
    assert ds.feature_names == ["f0", "f1", "f2"]


def test_load_csv_response_file(tmp_path):
    rng = derived_rng(8, 9)
    X = rng.standard_normal((6, 2))
    y = rng.standard_normal(6)
    fpath = tmp_path / "x.csv"
    rpath = tmp_path / "y.csv"
    _write_csv(fpath, X)
    rpath.write_text("resp\n" + "\n".join(str(v) for v in y) + "\n")
    ds = load_csv(str(fpath), response_path=str(rpath))
    np.testing.assert_allclose(ds.y, y)


def test_load_csv_rejects_missing_values(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,resp\n1,2,3\n4,NA,6\n")
    with pytest.raises(InputError, match="missing value"):
        load_csv(str(path), response="resp")


def test_load_csv_missing_file_is_input_error(tmp_path):
    with pytest.raises(InputError, match="cannot read"):
        load_csv(str(tmp_path / "none.csv"), response="resp")


def test_load_feature_csv(tmp_path):
    rng = derived_rng(9, 9)
    X = rng.standard_normal((4, 3))
    path = tmp_path / "f.csv"
    _write_csv(path, X)
    got, names = load_feature_csv(str(path))
    np.testing.assert_allclose(got, X)
    assert names == ["f0", "f1", "f2"]
