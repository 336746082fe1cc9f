import numpy as np
import pytest

from coalloc.dataio import DataError, ReturnsMatrix, load_covariance, load_mean, load_returns, sample_moments
from coalloc.variance import CovarianceMatrix, variance_shapley


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_load_returns_small(tmp_path):
    r = load_returns(write(tmp_path, "r.csv", "A,B\n0.1,0.2\n-0.05,0.0\n0.3,0.1\n"))
    assert (r.T, r.n) == (3, 2)
    assert r.names == ("A", "B")
    assert r.values[2, 0] == 0.3


def test_load_returns_names_bad_cell(tmp_path):
    with pytest.raises(DataError, match=r"row 3, column 'B'.*'NaN'"):
        load_returns(write(tmp_path, "r.csv", "A,B\n1,2\n3,NaN\n"))
    with pytest.raises(DataError, match=r"row 2, column 'A'.*non-numeric"):
        load_returns(write(tmp_path, "r.csv", "A,B\nx,2\n3,4\n"))


def test_load_returns_structure_errors(tmp_path):
    with pytest.raises(DataError, match="T=0"):
        load_returns(write(tmp_path, "r.csv", "A,B\n"))
    with pytest.raises(DataError, match="T=1"):
        load_returns(write(tmp_path, "r.csv", "A,B\n1,2\n"))
    with pytest.raises(DataError, match="row 3 has 1 fields"):
        load_returns(write(tmp_path, "r.csv", "A,B\n1,2\n3\n"))
    with pytest.raises(DataError, match="empty"):
        load_returns(write(tmp_path, "r.csv", ""))


def test_returns_matrix_validation():
    with pytest.raises(DataError):
        ReturnsMatrix(("a",), np.array([[1.0]]))
    with pytest.raises(DataError):
        ReturnsMatrix(("a",), np.array([[1.0], [np.inf]]))
    with pytest.raises(DataError):
        ReturnsMatrix(("a", "b"), np.zeros((3, 3)))


def test_load_covariance_and_mean(tmp_path):
    c = load_covariance(write(tmp_path, "c.csv", "1,-2\n-2,4\n"))
    assert isinstance(c, CovarianceMatrix)
    assert c.entries.tolist() == [[1.0, -2.0], [-2.0, 4.0]]
    assert load_mean(write(tmp_path, "m.csv", "0.1,0.2\n")).tolist() == [0.1, 0.2]
    with pytest.raises(ValueError):
        load_covariance(write(tmp_path, "c.csv", "1,0\n0,1\n0,0\n"))
    with pytest.raises(ValueError):
        load_covariance(write(tmp_path, "c.csv", "1,2\n2,1\n"))


def test_sample_moments_identity_rows():
    mu, cov = sample_moments(ReturnsMatrix(("a", "b"), [[1.0, 0.0], [0.0, 1.0]]))
    assert mu.tolist() == [0.5, 0.5]
    assert cov.entries.tolist() == [[0.5, -0.5], [-0.5, 0.5]]


def test_sample_moments_degenerate_cases(rng):
    const = ReturnsMatrix(("a", "b", "c"), np.tile([0.1, -0.2, 3.0], (6, 1)))
    _, cov = sample_moments(const)
    assert not np.any(cov.entries)
    assert not np.any(variance_shapley(cov))
    x = rng.normal(size=50)
    _, cov = sample_moments(ReturnsMatrix(("x", "-x"), np.column_stack([x, -x])))
    assert np.abs(variance_shapley(cov)).max() <= 1e-12


def test_sample_moments_matches_numpy_and_row_permutation(rng):
    vals = rng.normal(size=(40, 5))
    r = ReturnsMatrix(tuple("abcde"), vals)
    mu, cov = sample_moments(r)
    np.testing.assert_allclose(mu, vals.mean(axis=0), atol=1e-15)
    np.testing.assert_allclose(cov.entries, np.cov(vals, rowvar=False), atol=1e-14)
    assert np.array_equal(cov.entries, cov.entries.T)
    mu2, cov2 = sample_moments(ReturnsMatrix(r.names, vals[rng.permutation(40)]))
    np.testing.assert_allclose(mu2, mu, atol=1e-15)
    np.testing.assert_allclose(cov2.entries, cov.entries, atol=1e-14)
