import warnings

import numpy as np
import pytest

from codashrink.codata import (CoDataError, CoDataMatrix, CoDataSource, Dataset,
                               GroupStructure, encode_codata, to_group_structure)


def test_grouped_encoding_absorbs_first_group():
    Z = encode_codata([CoDataSource.grouped([1, 1, 2, 2])], 4)
    np.testing.assert_array_equal(Z.Z, [[1, 1, 1, 1], [0, 0, 1, 1]])
    assert Z.row_labels == ("intercept", "groups[2]")
    np.testing.assert_array_equal(Z.group_indicator_columns(), [0, 0, 1, 1])


def test_continuous_standardized():
    Z = encode_codata([CoDataSource.continuous([1.0, 2.0, 3.0])], 3)
    np.testing.assert_allclose(Z.Z[1], [-1.0, 0.0, 1.0])
    assert Z.group_indicator_columns() is None


def test_constant_continuous_rejected():
    with pytest.raises(CoDataError):
        encode_codata([CoDataSource.continuous([2.0, 2.0, 2.0])], 3)


def test_two_sources_give_three_rows():
    g = np.r_[np.ones(5, int), 2 * np.ones(15, int)]
    z = np.log(np.linspace(0.01, 1, 20))
    Z = encode_codata([CoDataSource.grouped(g, "z1"), CoDataSource.continuous(z, "z2")], 20)
    assert Z.C == 3
    assert Z.row_labels == ("intercept", "z1[2]", "z2")
    assert abs(Z.Z[2].mean()) < 1e-12
    assert abs(Z.Z[2].std(ddof=1) - 1) < 1e-12


@pytest.mark.parametrize("a,sizes", [((1, 1, 2), (2, 1)), ((1, 2, 3), (1, 1, 1))])
def test_group_sizes(a, sizes):
    gs = GroupStructure.from_assignments(a)
    np.testing.assert_array_equal(gs.sizes, sizes)
    assert gs.G == len(sizes)


def test_missing_group_rejected():
    with pytest.raises(CoDataError, match="missing"):
        to_group_structure(CoDataSource.grouped([2, 2]))
    with pytest.raises(CoDataError):
        CoDataSource.grouped([0, 1])


def test_length_mismatch():
    with pytest.raises(CoDataError, match="length"):
        encode_codata([CoDataSource.grouped([1, 2, 2])], 4)


def test_intercept_only_flag():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        Z = encode_codata([CoDataSource.grouped([1, 1, 1])], 3)
    assert "intercept_only" in Z.warnings
    assert any("intercept" in str(x.message) for x in w)
    assert Z.C == 1


def test_permutation_equivariance(rng):
    p = 30
    g = rng.integers(1, 5, p)
    g[:4] = [1, 2, 3, 4]
    z = rng.standard_normal(p)
    perm = rng.permutation(p)
    Z = encode_codata([CoDataSource.grouped(g), CoDataSource.continuous(z)], p)
    Zp = encode_codata([CoDataSource.grouped(g[perm]), CoDataSource.continuous(z[perm])], p)
    np.testing.assert_allclose(Zp.Z, Z.Z[:, perm], atol=1e-14)


def test_indicator_rows_span_one_hot(rng):
    g = np.r_[1, 2, 3, rng.integers(1, 4, 9)]
    Z = encode_codata([CoDataSource.grouped(g)], g.size).Z
    onehot = np.vstack([(g == k).astype(float) for k in (1, 2, 3)])
    r = np.linalg.matrix_rank
    assert r(Z) == r(onehot) == r(np.vstack([Z, onehot])) == 3


def test_dataset_validation_and_copy():
    X = np.arange(6.0).reshape(3, 2)
    y = np.ones(3)
    d = Dataset(X, y)
    assert X.flags.writeable  # caller's array untouched
    assert not d.X.flags.writeable
    with pytest.raises(CoDataError):
        Dataset(np.ones((1, 2)), [1.0])
    with pytest.raises(CoDataError):
        Dataset(np.ones((3, 2)), [1.0, 2.0])
    with pytest.raises(CoDataError):
        Dataset(np.array([[np.nan], [1.0]]), [1.0, 2.0])
    dc = d.centered()
    np.testing.assert_allclose(dc.X.mean(0), 0, atol=1e-15)


def test_intercept_only_matrix():
    M = CoDataMatrix.intercept_only(5)
    np.testing.assert_array_equal(M.group_indicator_columns(), np.zeros(5))
