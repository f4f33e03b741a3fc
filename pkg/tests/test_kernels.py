import numpy as np
import pytest

from codashrink import _kernels as K

pytestmark = pytest.mark.skipif(not K._HAVE_NUMBA, reason="numba not installed")


def _data(rng, n=25, p=40):
    X = rng.standard_normal((n, p))
    y = X[:, :4] @ rng.standard_normal(4) + rng.standard_normal(n)
    return X, y, np.ascontiguousarray(X.T)


def test_cd_lasso_twins(rng):
    X, y, XT = _data(rng)
    pen = np.full(X.shape[1], 0.2 * np.abs(XT @ y).max())
    norm2 = (X * X).sum(0)
    outs = []
    for fn in (K.cd_lasso_np, K.cd_lasso_nb):
        r, b = y.copy(), np.zeros(X.shape[1])
        sweeps, ok = fn(XT, r, b, pen, norm2, 1e-10, 10000)
        outs.append((b, r, sweeps, ok))
    np.testing.assert_allclose(outs[0][0], outs[1][0], atol=1e-12)
    np.testing.assert_allclose(outs[0][1], outs[1][1], atol=1e-12)
    assert outs[0][2:] == outs[1][2:]


def test_sgl_twins(rng):
    X, y, XT = _data(rng)
    gptr = np.array([0, 10, 25, 40], dtype=np.int64)
    wts = np.sqrt(np.diff(gptr).astype(float))
    lips = np.array([np.linalg.norm(XT[a:b], 2) ** 2 for a, b in zip(gptr[:-1], gptr[1:])])
    lam = 0.2 * np.abs(XT @ y).max()
    outs = []
    for fn in (K.sgl_bcd_np, K.sgl_bcd_nb):
        r, b = y.copy(), np.zeros(40)
        res = fn(XT, r, b, gptr, wts, 0.9 * lam, 0.1 * lam, lips, 1e-10, 5000, 1e-12, 50000)
        outs.append((b, res))
    np.testing.assert_allclose(outs[0][0], outs[1][0], atol=1e-10)
    assert outs[0][1][1] and outs[1][1][1]


def test_vb_sweep_twins(rng):
    X, y, XT = _data(rng)
    p = X.shape[1]
    norm2 = (X * X).sum(0)
    s2 = 1.0 / (norm2 + 4.0)
    lq = np.full(p, np.log(0.05 / 0.95))
    order = rng.permutation(p).astype(np.int64)
    outs = []
    for fn in (K.vb_sweep_np, K.vb_sweep_nb):
        r, a, m = y.copy(), np.full(p, 0.05), np.zeros(p)
        for _ in range(5):
            dmax = fn(XT, r, a, m, s2.copy(), lq, norm2, 1.0, 0.25, order)
        outs.append((a, m, r, dmax))
    for u, v in zip(outs[0][:3], outs[1][:3]):
        np.testing.assert_allclose(u, v, atol=1e-12)


def test_backend_name():
    assert K.backend() in ("numba", "numpy")
