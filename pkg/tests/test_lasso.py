import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from codashrink.codata import Dataset, GroupStructure
from codashrink.lasso import (NOT_ENTERED, SelectionError, WeightedLassoProblem, cd_fit,
                              group_adaptive_lasso, lasso_select, path, select_to_size,
                              soft_threshold, t_max)
from codashrink.simgen import gen_main


@pytest.mark.parametrize("z,g,out", [(3, 1, 2), (-3, 1, -2), (0.5, 1, 0)])
def test_soft_threshold(z, g, out):
    assert soft_threshold(np.array([z]), g)[0] == out


def _small_fixtures():
    rng = np.random.default_rng(2024)
    out = []
    for n in range(2, 7):
        for p in (1, 2):
            for _ in range(3):
                X = rng.standard_normal((n, p))
                y = X @ rng.uniform(-1, 1, p) + 0.3 * rng.standard_normal(n)
                gamma = rng.uniform(0.05, 1.0, p) * np.abs(X.T @ y).max()
                out.append((X, y, gamma))
    return out


def _grid_oracle(X, y, gamma, h=1e-3, lim=3.0):
    """Grid over beta_1; for p = 2 the second coordinate is minimised exactly."""
    b1 = np.arange(-lim, lim + h / 2, h)
    if X.shape[1] == 1:
        r = y[None, :] - b1[:, None] * X[:, 0]
        f = 0.5 * np.sum(r * r, 1) + gamma[0] * np.abs(b1)
        k = np.argmin(f)
        return f[k], np.array([b1[k]])
    x1, x2 = X[:, 0], X[:, 1]
    R = y[None, :] - b1[:, None] * x1
    b2 = soft_threshold(R @ x2, gamma[1]) / (x2 @ x2)
    r = R - b2[:, None] * x2
    f = 0.5 * np.sum(r * r, 1) + gamma[0] * np.abs(b1) + gamma[1] * np.abs(b2)
    k = np.argmin(f)
    return f[k], np.array([b1[k], b2[k]])


def test_brute_force_small_fixtures():
    for X, y, gamma in _small_fixtures():
        prob = WeightedLassoProblem(Dataset(X, y), gamma)
        res = cd_fit(prob, tol=1e-12)
        f_cd = prob.objective(res.beta)
        f_grid, b_grid = _grid_oracle(X, y, gamma)
        assert np.all(np.abs(b_grid) < 3.0 - 1e-3)
        assert abs(f_cd - f_grid) <= 1e-5
        assert f_cd <= f_grid + 1e-12


def test_zero_at_large_penalty(rng):
    X, y = rng.standard_normal((20, 10)), rng.standard_normal(20)
    gamma = np.abs(X.T @ y) + 1e-9
    res = cd_fit(WeightedLassoProblem(Dataset(X, y), gamma))
    assert not np.any(res.beta)


def test_kkt_certificates(rng):
    for _ in range(10):
        n, p = int(rng.integers(10, 40)), int(rng.integers(5, 80))
        X, y = rng.standard_normal((n, p)), rng.standard_normal(n)
        gamma = rng.uniform(0.5, 2.0, p)
        prob = WeightedLassoProblem(Dataset(X, y), gamma)
        t = 0.3 * t_max(prob)
        res = cd_fit(prob, t=t, tol=1e-10)
        assert res.converged
        assert prob.kkt_violation(res.beta, t) <= 1e-6


def test_objective_monotone_over_sweeps(rng):
    X, y = rng.standard_normal((30, 50)), rng.standard_normal(30)
    prob = WeightedLassoProblem(Dataset(X, y), np.ones(50))
    t = 0.1 * t_max(prob)
    objs = [prob.objective(np.zeros(50), t)]
    for k in range(1, 15):
        objs.append(prob.objective(cd_fit(prob, t=t, max_sweeps=k, tol=0.0).beta, t))
    assert np.all(np.diff(objs) <= 1e-12)


def test_path_first_point_zero_and_entry(rng):
    X, y = rng.standard_normal((30, 20)), rng.standard_normal(30)
    prob = WeightedLassoProblem(Dataset(X, y), np.ones(20))
    cp = path(prob, grid_size=30)
    assert not np.any(cp.betas[0])
    for j in range(20):
        k = cp.entry_order[j]
        if k != NOT_ENTERED:
            assert cp.betas[k, j] != 0 and not np.any(cp.betas[:k, j])


def test_select_sizes(rng):
    X, y = rng.standard_normal((40, 6)), rng.standard_normal(40)
    prob = WeightedLassoProblem(Dataset(X, y), np.ones(6))
    cp = path(prob, grid_size=200, ratio=1e-6)
    assert select_to_size(cp, 0).size == 0
    assert sorted(select_to_size(cp, 6)) == list(range(6))
    short = path(prob, grid_size=2, ratio=0.99)
    with pytest.raises(SelectionError):
        select_to_size(short, 6)


def test_select_ties_by_magnitude_then_index():
    from codashrink.lasso import CoefPath
    betas = np.array([[0, 0, 0, 0], [0.1, -0.5, 0.1, 0], [0.2, -0.6, 0.2, 0.3]])
    cp = CoefPath(np.array([3.0, 2.0, 1.0]), betas, np.array([1, 1, 1, 2]))
    np.testing.assert_array_equal(select_to_size(cp, 3), [1, 0, 2])
    np.testing.assert_array_equal(select_to_size(cp, 4), [1, 0, 2, 3])


def test_selection_deterministic_and_sized():
    inst = gen_main(n=100, p=300, G=3, seed=5)
    a = group_adaptive_lasso(inst.d, inst.groups, 25)
    b = group_adaptive_lasso(inst.d, inst.groups, 25)
    assert a.selected.size == 25
    assert a.selected.tobytes() == b.selected.tobytes()


def test_single_group_equals_lasso(rng):
    inst = gen_main(n=80, p=150, G=3, seed=1)
    one = GroupStructure.from_assignments(np.ones(150, dtype=int))
    a = group_adaptive_lasso(inst.d, one, 20)
    b = lasso_select(inst.d, 20)
    np.testing.assert_array_equal(a.selected, b.selected)


def test_all_noise_still_selects(rng):
    X, y = rng.standard_normal((50, 120)), rng.standard_normal(50)
    g = GroupStructure.from_assignments(np.repeat([1, 2, 3], 40))
    res = group_adaptive_lasso(Dataset(X, y), g, 30)
    assert res.selected.size == 30 and np.unique(res.selected).size == 30


def test_zero_norm_column_requires_penalty():
    X = np.c_[np.zeros(4), np.arange(4.0)]
    with pytest.raises(ValueError):
        WeightedLassoProblem(Dataset(X, np.ones(4)), np.array([0.0, 1.0]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_kkt_property(seed):
    rng = np.random.default_rng(seed)
    n, p = int(rng.integers(3, 15)), int(rng.integers(1, 25))
    X, y = rng.standard_normal((n, p)), rng.standard_normal(n)
    prob = WeightedLassoProblem(Dataset(X, y), rng.uniform(0.1, 1.0, p))
    t = rng.uniform(0.05, 1.2) * t_max(prob)
    res = cd_fit(prob, t=t, tol=1e-11)
    assert prob.kkt_violation(res.beta, t) <= 1e-6
