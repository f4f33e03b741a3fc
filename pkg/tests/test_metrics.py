import numpy as np
import pytest

from codashrink.metrics import MetricError, f1_at, roc


def test_f1_cases():
    assert f1_at([0, 1], [0, 1], 5).f1 == 1.0
    assert f1_at([2, 3], [0, 1], 5).f1 == 0.0
    ev = f1_at(np.arange(50), np.r_[np.arange(25), np.arange(100, 225)], 300)
    assert (ev.precision, ev.recall) == (0.5, pytest.approx(1 / 6))
    assert ev.f1 == pytest.approx(0.25)
    assert ev.tp + ev.fp == 50 and ev.tp + ev.fn == 150
    assert f1_at([], [1], 3).f1 == 0.0


def test_f1_errors():
    with pytest.raises(MetricError):
        f1_at([0], [], 3)
    with pytest.raises(MetricError):
        f1_at([5], [0], 3)


def test_f1_relabel_invariance(rng):
    p = 100
    sel, tru = rng.choice(p, 20, replace=False), rng.choice(p, 30, replace=False)
    perm = rng.permutation(p)
    assert f1_at(sel, tru, p) == f1_at(perm[sel], perm[tru], p)


def test_roc_hand_example():
    c = roc([0.9, 0.8, 0.3], [0])
    assert c.points == [(0.0, 0.0), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]
    assert c.auc == 1.0


def test_roc_perfect_and_reversed():
    s = np.arange(10.0)
    assert roc(s, [7, 8, 9]).auc == 1.0
    assert roc(-s, [7, 8, 9]).auc == 0.0


def test_roc_degenerate():
    c = roc(np.ones(6), [1, 2])
    assert c.degenerate and c.auc == 0.5


def test_roc_errors():
    with pytest.raises(MetricError):
        roc([1.0, np.nan], [0])
    with pytest.raises(MetricError):
        roc([1.0, 2.0], [0, 1])


def test_auc_equals_mann_whitney(rng):
    for _ in range(20):
        p = int(rng.integers(5, 60))
        s = np.round(rng.standard_normal(p), 1)  # force ties
        k = int(rng.integers(1, p))
        sup = rng.choice(p, k, replace=False)
        lab = np.zeros(p, bool)
        lab[sup] = True
        a, b = s[lab][:, None], s[~lab][None, :]
        mw = (np.sum(a > b) + 0.5 * np.sum(a == b)) / (a.size * b.size)
        assert abs(roc(s, sup).auc - mw) <= 1e-12
