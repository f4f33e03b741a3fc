import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from codashrink.transfer import ridge_to_inclusion_probs, ridge_to_lasso_rates


@pytest.mark.parametrize("v,lam", [(2.0, 1.0), (0.5, 2.0), (0.125, 4.0)])
def test_lasso_rates(v, lam):
    assert ridge_to_lasso_rates(np.array([v]))[0] == pytest.approx(lam, rel=1e-15)


def test_lasso_rates_reject_nonpositive():
    with pytest.raises(ValueError):
        ridge_to_lasso_rates(np.array([1.0, 0.0]))


def test_uniform_probs():
    tr = ridge_to_inclusion_probs(np.full(7, 3.3), 0.01)
    np.testing.assert_allclose(tr.inclusion_probs, 0.01, rtol=1e-14)


def test_proportional_probs():
    tr = ridge_to_inclusion_probs(np.array([3.0, 1.0]), 0.01)
    np.testing.assert_allclose(tr.inclusion_probs, [0.015, 0.005], rtol=1e-14)
    assert tr.clipped_count == 0


def test_clipped_two_feature_closed_form():
    eps = 1e-6
    tr = ridge_to_inclusion_probs(np.array([1.0, 9.0]), 0.6, eps)
    assert tr.inclusion_probs[1] == 1 - eps
    assert tr.inclusion_probs[0] == pytest.approx(2 * 0.6 - (1 - eps), abs=1e-12)
    assert tr.clipped_count == 1


def test_errors():
    with pytest.raises(ValueError):
        ridge_to_inclusion_probs(np.zeros(3), 0.01)
    with pytest.raises(ValueError):
        ridge_to_inclusion_probs(np.ones(3), 1.0)
    with pytest.raises(ValueError):
        ridge_to_inclusion_probs(np.ones(3), 0.01, eps=0.5)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1e-6, 1e3), min_size=2, max_size=40),
       st.floats(1e-4, 0.3))
def test_mean_and_order(v, q_bar):
    v = np.array(v)
    q = ridge_to_inclusion_probs(v, q_bar).inclusion_probs
    assert abs(q.mean() - q_bar) <= 1e-10
    o = np.argsort(v, kind="stable")
    assert np.all(np.diff(q[o]) >= -1e-15)
    assert np.all((q > 0) & (q < 1))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 10.0), min_size=2, max_size=20), st.floats(0.01, 100.0))
def test_scale_equivariance(v, c):
    v = np.array(v)
    a = ridge_to_inclusion_probs(v, 0.01).inclusion_probs
    b = ridge_to_inclusion_probs(c * v, 0.01).inclusion_probs
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_monte_carlo_laplace_variance():
    rng = np.random.default_rng(7)
    for v in (0.3, 2.0, 11.0):
        lam = ridge_to_lasso_rates(np.array([v]))[0]
        draws = rng.laplace(0.0, 1.0 / lam, 10**6)
        assert abs(draws.var() / v - 1) < 0.01


def test_monte_carlo_spike_slab_variance():
    rng = np.random.default_rng(8)
    tau2 = 0.25
    for q in (0.05, 0.3, 0.8):
        slab = rng.random(10**6) < q
        beta = np.where(slab, np.sqrt(tau2) * rng.standard_normal(10**6), 0.0)
        assert abs(beta.var() / (q * tau2) - 1) < 0.02
