import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from codashrink.codata import CoDataMatrix, CoDataSource, Dataset, encode_codata
from codashrink.ridge_eb import (MarginalLikelihood, ShrinkConfig, fit_codata_alpha,
                                 fit_single_penalty, log_marglik, log_marglik_grad,
                                 shrinkage_penalty)
from codashrink.simgen import gen_null_groups

# frozen from scipy.stats.multivariate_normal on the explicit 2x2 covariance
BIVARIATE_X = np.array([[0.3, -1.2], [0.8, 0.5]])
BIVARIATE_Y = np.array([0.7, -0.4])
BIVARIATE_V = np.array([0.9, 1.7])
BIVARIATE_S2 = 0.6
BIVARIATE_LOGML = -2.6701459174190028


def test_zero_design():
    d = Dataset(np.zeros((2, 1)), np.zeros(2))
    assert log_marglik(d, 3.0, 1.0) == pytest.approx(-math.log(2 * math.pi), rel=1e-15)


def test_bivariate_density_oracle():
    S = BIVARIATE_X @ np.diag(BIVARIATE_V) @ BIVARIATE_X.T + BIVARIATE_S2 * np.eye(2)
    live = multivariate_normal(np.zeros(2), S).logpdf(BIVARIATE_Y)
    assert live == pytest.approx(BIVARIATE_LOGML, rel=1e-13)
    d = Dataset(BIVARIATE_X, BIVARIATE_Y)
    assert log_marglik(d, BIVARIATE_V, BIVARIATE_S2) == pytest.approx(BIVARIATE_LOGML, rel=1e-12)


def _instance(rng, n=5, p=8):
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    z = rng.standard_normal(p)
    g = np.r_[1, 2, rng.integers(1, 3, p - 2)]
    return Dataset(X, y), z, g


def test_equal_groups_match_single(rng):
    d, _, g = _instance(rng, 6, 10)
    Z = encode_codata([CoDataSource.grouped(g)], d.p)
    v0, s2 = 0.37, 0.8
    ml = MarginalLikelihood(d, Z)
    val = ml.value_grad(np.array([-math.log(v0), 0.0]), math.log(s2))[0]
    assert val == pytest.approx(log_marglik(d, v0, s2), rel=1e-12)


@pytest.mark.parametrize("mode", ["features", "grouped"])
def test_gradient_finite_differences(rng, mode):
    h = 1e-5
    for _ in range(20):
        d, z, g = _instance(rng)
        if mode == "grouped":
            Z = encode_codata([CoDataSource.grouped(g)], d.p)
        else:
            Z = encode_codata([CoDataSource.continuous(z)], d.p)
        ml = MarginalLikelihood(d, Z, mode=mode)
        x = np.r_[rng.normal(0, 0.5, Z.C), rng.normal(0, 0.5)]

        def f(xx):
            return ml.value_grad(xx[:-1], xx[-1])[0]
        _, ga, gs = ml.value_grad(x[:-1], x[-1])
        grad = np.r_[ga, gs]
        fd = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(x.size)])
        rel = np.abs(grad - fd) / np.maximum(np.abs(fd), 1e-12)
        assert rel.max() <= 1e-5, (grad, fd)


def test_grad_helper_length(rng):
    d, z, _ = _instance(rng)
    Z = encode_codata([CoDataSource.continuous(z)], d.p)
    assert log_marglik_grad(d, Z, np.zeros(2), 0.0).shape == (3,)


def test_rotation_invariance(rng):
    n, p = 7, 12
    X, y = rng.standard_normal((n, p)), rng.standard_normal(n)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    v = rng.uniform(0.1, 2, p)
    a = log_marglik(Dataset(X, y), v, 0.7)
    b = log_marglik(Dataset(Q @ X, Q @ y), v, 0.7)
    assert abs(a - b) <= 1e-9 * abs(a)


def test_zero_response_hits_bounds(rng):
    d = Dataset(rng.standard_normal((20, 30)), np.zeros(20))
    fit = fit_single_penalty(d)
    assert "sigma2_lower" in fit.at_bounds
    assert "lambda_upper" in fit.at_bounds
    assert np.isfinite(fit.logml)


def test_single_fit_dominates_truth(rng):
    n, p, v0, s20 = 100, 500, 0.01, 1.0
    X = rng.standard_normal((n, p))
    y = X @ (math.sqrt(v0) * rng.standard_normal(p)) + math.sqrt(s20) * rng.standard_normal(n)
    d = Dataset(X, y)
    fit = fit_single_penalty(d)
    assert fit.converged
    assert fit.logml >= log_marglik(d, v0, s20)
    assert fit.grad_norm < 1e-6
    tr = np.array(fit.trace)
    assert np.all(np.diff(tr) >= -1e-12 * np.abs(tr[1:]))


def test_single_fit_deterministic(rng):
    d = Dataset(rng.standard_normal((30, 60)), rng.standard_normal(30))
    a, b = fit_single_penalty(d), fit_single_penalty(d)
    assert a.alpha.tobytes() == b.alpha.tobytes() and a.sigma2 == b.sigma2


def test_intercept_only_nests_single(rng):
    d = Dataset(rng.standard_normal((40, 80)), rng.standard_normal(40))
    single = fit_single_penalty(d)
    fit = fit_codata_alpha(d, CoDataMatrix.intercept_only(d.p))
    assert abs(fit.logml - single.logml) <= 1e-8


def test_shrinkage_penalty_at_target():
    pen, grad = shrinkage_penalty(np.full(4, 2.5), 2.5, scale=0.5, smooth_c=1e-8)
    assert pen == pytest.approx(4 * math.sqrt(1e-8) / 0.5, rel=1e-15)
    np.testing.assert_array_equal(grad, 0.0)


def test_targeted_shrinkage_pulls_to_target():
    inst = gen_null_groups(n=100, p=600, G=20, seed=3)
    d = inst.d
    Z = encode_codata(inst.codata, d.p)
    single = fit_single_penalty(d)
    plain = fit_codata_alpha(d, Z, single=single)
    shr = fit_codata_alpha(d, Z, ShrinkConfig(True), single=single)
    ids = Z.group_indicator_columns()
    first = np.r_[0, [np.flatnonzero(ids == g)[0] for g in range(1, Z.C)]]
    t = single.alpha[0]
    dev_plain = np.max(np.abs(plain.log_lambda[first] - t))
    dev_shr = np.max(np.abs(shr.log_lambda[first] - t))
    assert dev_shr < dev_plain


def test_shrinkage_rejects_mixed_codata(rng):
    d, z, g = _instance(rng, 10, 12)
    Z = encode_codata([CoDataSource.grouped(g), CoDataSource.continuous(z)], d.p)
    with pytest.raises(ValueError, match="grouped"):
        fit_codata_alpha(d, Z, ShrinkConfig(True))


def test_requires_intercept_and_rank(rng):
    d, z, _ = _instance(rng, 10, 12)
    with pytest.raises(ValueError):
        fit_codata_alpha(d, np.vstack([z, z ** 2]))
    with pytest.raises(ValueError, match="rank"):
        fit_codata_alpha(d, np.vstack([np.ones(12), np.ones(12)]))


def test_penalty_fit_json(rng):
    d = Dataset(rng.standard_normal((15, 20)), rng.standard_normal(15))
    js = fit_single_penalty(d).to_dict()
    assert set(js) >= {"alpha", "sigma2", "logml", "converged", "v_summary"}
