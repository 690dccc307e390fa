import numpy as np
import pytest

from mullkit.data import (Coefficients, Dataset, Task, ZeroVarianceColumnError,
                          l1_norm, load_csv, standardize,
                          unstandardize_coefficients)


def test_standardize_constant_column():
    data = Dataset(np.array([[2.0], [2.0], [2.0]]), np.array([0.0, 1.0, 0.0]),
                   Task.BINARY)
    out = standardize(data)
    assert np.allclose(out.features, 1.0)
    assert out.standardized
    assert np.allclose(out.column_scales, 2.0)


def test_standardize_idempotent():
    rng = np.random.default_rng(0)
    data = Dataset(rng.normal(size=(7, 3)), rng.normal(size=7), Task.QUANTILE)
    once = standardize(data)
    twice = standardize(once)
    assert np.max(np.abs(twice.features - once.features)) <= 1e-12
    # scales still map back to the raw matrix
    assert np.allclose(twice.features * twice.column_scales, data.features)


def test_standardize_unit_second_moment():
    rng = np.random.default_rng(1)
    data = Dataset(rng.normal(size=(5, 3)) * 3.0, rng.normal(size=5), Task.QUANTILE)
    out = standardize(data)
    ms = np.mean(out.features**2, axis=0)
    assert np.max(np.abs(ms - 1.0)) <= 1e-10


def test_standardize_zero_column_errors_with_index():
    X = np.ones((4, 3))
    X[:, 1] = 0.0
    data = Dataset(X, np.zeros(4), Task.BINARY)
    with pytest.raises(ZeroVarianceColumnError, match="index 1"):
        standardize(data)


def test_unstandardize_roundtrip():
    rng = np.random.default_rng(2)
    data = standardize(Dataset(rng.normal(size=(20, 4)) * [1, 2, 3, 4],
                               rng.normal(size=20), Task.QUANTILE))
    coef = Coefficients(rng.normal(size=4), 0.5)
    raw = unstandardize_coefficients(coef, data)
    # predictions agree on both scales
    X_raw = data.features * data.column_scales
    assert np.allclose(X_raw @ raw.beta, data.features @ coef.beta)
    assert raw.intercept == coef.intercept


def test_l1_norm_values():
    assert l1_norm([0.0, 0.0, 0.0]) == 0.0
    assert l1_norm([1.0, -2.0, 3.0]) == 6.0


def test_l1_norm_matches_independent_accumulation():
    rng = np.random.default_rng(3)
    v = rng.normal(size=100)
    acc = 0.0
    for x in v[::-1]:       # reversed order, scalar accumulation
        acc += abs(float(x))
    assert abs(l1_norm(v) - acc) <= 1e-12 * max(1.0, acc)


def test_l1_norm_absolute_homogeneity():
    rng = np.random.default_rng(4)
    for _ in range(25):
        v = rng.normal(size=rng.integers(1, 30))
        c = float(rng.normal() * 10)
        lhs = l1_norm(c * v)
        rhs = abs(c) * l1_norm(v)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.array([[1.0, np.nan]]), np.array([1.0]), Task.BINARY)
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 2)), np.ones(2), Task.BINARY)
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 2)) * 5, np.ones(2), Task.BINARY, standardized=True)


def test_coefficients_nnz_exact():
    coef = Coefficients(np.array([0.0, 1e-300, -2.0]))
    assert coef.nnz == 2


def test_load_csv_roundtrip(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("y,a,b\n1,0.5,2.5\n0,-1.5,3.5\n")
    data = load_csv(path)
    assert data.task == Task.BINARY
    assert data.feature_names == ("a", "b")
    assert np.allclose(data.features, [[0.5, 2.5], [-1.5, 3.5]])
    assert np.allclose(data.response, [1.0, 0.0])


def test_load_csv_named_response_and_quantile(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,resp,b\n0.5,3.7,2.5\n-1.5,1.2,3.5\n")
    data = load_csv(path, response_column="resp")
    assert data.task == Task.QUANTILE
    assert data.feature_names == ("a", "b")


def test_load_csv_rejects_missing(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("y,a\n1,\n")
    with pytest.raises(ValueError, match="missing value"):
        load_csv(path)
    path.write_text("y,a\n1,frog\n")
    with pytest.raises(ValueError, match="non-numeric"):
        load_csv(path)
