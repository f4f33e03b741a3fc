"""Hot inner loops: coordinate descent, sparse group-lasso blocks, VB sweeps.

Every kernel exists twice: a numba ``@njit`` version written with explicit
loops, and a numpy version that vectorises what it can. The numba path is used
unless ``CODASHRINK_NUMBA=0`` is set in the environment (or numba fails to
import). Both paths mutate their array arguments in place and return the same
scalars, so they are interchangeable and are cross-checked in the test suite.

All kernels take the design transposed, ``XT`` of shape (p, n), C-contiguous,
so that one feature is one contiguous row.
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def _env_wants_numba() -> bool:
    flag = os.environ.get("CODASHRINK_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


USE_NUMBA = _HAVE_NUMBA and _env_wants_numba()


# ---------------------------------------------------------------------------
# weighted lasso coordinate descent
# ---------------------------------------------------------------------------

def _cd_pass_np(XT, r, beta, pen, norm2, active_only):
    dmax = 0.0
    for j in range(XT.shape[0]):
        bj = beta[j]
        if active_only and bj == 0.0:
            continue
        nj = norm2[j]
        if nj == 0.0:
            continue
        xj = XT[j]
        z = xj @ r + nj * bj
        if z > pen[j]:
            new = (z - pen[j]) / nj
        elif z < -pen[j]:
            new = (z + pen[j]) / nj
        else:
            new = 0.0
        d = new - bj
        if d != 0.0:
            r -= d * xj
            beta[j] = new
            if abs(d) > dmax:
                dmax = abs(d)
    return dmax


def cd_lasso_np(XT, r, beta, pen, norm2, tol, max_sweeps):
    """Cyclic CD for 0.5*||r||^2 + sum_j pen_j |beta_j| (numpy path).

    ``r`` must equal ``y - X @ beta`` on entry and is kept in sync. Full sweeps
    alternate with sweeps over the current active set; convergence is only
    declared after a full sweep. Returns ``(sweeps, converged)``.
    """
    sweeps = 0
    while sweeps < max_sweeps:
        dmax = _cd_pass_np(XT, r, beta, pen, norm2, False)
        sweeps += 1
        if dmax < tol * (1.0 + np.max(np.abs(beta))):
            return sweeps, True
        while sweeps < max_sweeps:
            dmax = _cd_pass_np(XT, r, beta, pen, norm2, True)
            sweeps += 1
            if dmax < tol * (1.0 + np.max(np.abs(beta))):
                break
    return sweeps, False


# ---------------------------------------------------------------------------
# sparse group lasso block coordinate descent
# ---------------------------------------------------------------------------

def _sgl_prox_np(u, t1, t2):
    s = np.sign(u) * np.maximum(np.abs(u) - t1, 0.0)
    nrm = math.sqrt(float(s @ s))
    if nrm <= t2:
        return np.zeros_like(s)
    return (1.0 - t2 / nrm) * s


def _sgl_block_np(Xg, rg, b, lam1, lam2w, lip, inner_tol, max_inner):
    # accelerated proximal gradient with fixed step 1/lip and gradient restart
    z = b.copy()
    t = 1.0
    iters = 0
    for iters in range(1, max_inner + 1):
        grad = -(Xg @ (rg - Xg.T @ z))
        bn = _sgl_prox_np(z - grad / lip, lam1 / lip, lam2w / lip)
        change = np.max(np.abs(bn - b)) if bn.size else 0.0
        tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if (z - bn) @ (bn - b) > 0.0:
            tn = 1.0
            z = bn.copy()
        else:
            z = bn + ((t - 1.0) / tn) * (bn - b)
        b = bn
        t = tn
        if change < inner_tol:
            break
    return b, iters


def sgl_bcd_np(XT, r, beta, gptr, wts, lam1, lam2, lips, tol, max_outer,
               inner_tol, max_inner):
    """Block CD for 0.5*||r||^2 + lam1*||b||_1 + lam2*sum_g w_g ||b_g||_2.

    Features must be ordered so that group ``g`` occupies rows
    ``gptr[g]:gptr[g+1]`` of ``XT``. Returns ``(outer_sweeps, converged)``.
    """
    G = gptr.shape[0] - 1
    for sweep in range(1, max_outer + 1):
        dmax = 0.0
        for g in range(G):
            a, e = gptr[g], gptr[g + 1]
            Xg = XT[a:e]
            old = beta[a:e].copy()
            rg = r + Xg.T @ old if np.any(old) else r.copy()
            c = Xg @ rg
            s = np.maximum(np.abs(c) - lam1, 0.0)
            if s @ s <= (lam2 * wts[g]) ** 2:
                new = np.zeros(e - a)
            else:
                new, _ = _sgl_block_np(Xg, rg, old, lam1, lam2 * wts[g],
                                       lips[g], inner_tol, max_inner)
            d = np.max(np.abs(new - old))
            if d > 0.0:
                beta[a:e] = new
                r[:] = rg - Xg.T @ new
                dmax = max(dmax, d)
        if dmax < tol:
            return sweep, True
    return max_outer, False


# ---------------------------------------------------------------------------
# spike-and-slab variational Bayes sweep
# ---------------------------------------------------------------------------

def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


def vb_sweep_np(XT, r, alpha, mu, s2, logit_q, norm2, sigma2, tau2, order):
    """One coordinate-ascent sweep over ``order``; returns max |delta alpha|.

    ``r`` holds ``y - X @ (alpha * mu)`` and is kept in sync.
    """
    dmax = 0.0
    for j in order:
        xj = XT[j]
        nj = norm2[j]
        s2j = sigma2 / (nj + sigma2 / tau2)
        old = alpha[j] * mu[j]
        muj = s2j / sigma2 * (xj @ r + nj * old)
        lo = logit_q[j] + 0.5 * math.log(s2j / tau2) + muj * muj / (2.0 * s2j)
        aj = _sigmoid(lo)
        d = aj * muj - old
        if d != 0.0:
            r -= d * xj
        da = abs(aj - alpha[j])
        if da > dmax:
            dmax = da
        alpha[j] = aj
        mu[j] = muj
        s2[j] = s2j
    return dmax


# ---------------------------------------------------------------------------
# numba versions
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    @njit(cache=True)
    def _dot(a, b):
        acc = 0.0
        for i in range(a.shape[0]):
            acc += a[i] * b[i]
        return acc

    @njit(cache=True)
    def _axpy(alpha, x, y):
        for i in range(x.shape[0]):
            y[i] += alpha * x[i]

    @njit(cache=True)
    def _cd_pass_nb(XT, r, beta, pen, norm2, active_only):
        dmax = 0.0
        for j in range(XT.shape[0]):
            bj = beta[j]
            if active_only and bj == 0.0:
                continue
            nj = norm2[j]
            if nj == 0.0:
                continue
            z = _dot(XT[j], r) + nj * bj
            if z > pen[j]:
                new = (z - pen[j]) / nj
            elif z < -pen[j]:
                new = (z + pen[j]) / nj
            else:
                new = 0.0
            d = new - bj
            if d != 0.0:
                _axpy(-d, XT[j], r)
                beta[j] = new
                if abs(d) > dmax:
                    dmax = abs(d)
        return dmax

    @njit(cache=True)
    def _maxabs(x):
        m = 0.0
        for i in range(x.shape[0]):
            if abs(x[i]) > m:
                m = abs(x[i])
        return m

    @njit(cache=True)
    def cd_lasso_nb(XT, r, beta, pen, norm2, tol, max_sweeps):
        sweeps = 0
        while sweeps < max_sweeps:
            dmax = _cd_pass_nb(XT, r, beta, pen, norm2, False)
            sweeps += 1
            if dmax < tol * (1.0 + _maxabs(beta)):
                return sweeps, True
            while sweeps < max_sweeps:
                dmax = _cd_pass_nb(XT, r, beta, pen, norm2, True)
                sweeps += 1
                if dmax < tol * (1.0 + _maxabs(beta)):
                    break
        return sweeps, False

    @njit(cache=True)
    def _xg_times(XT, a, e, b, out):
        # out = X_g @ b
        out[:] = 0.0
        for k in range(e - a):
            if b[k] != 0.0:
                _axpy(b[k], XT[a + k], out)

    @njit(cache=True)
    def _sgl_block_nb(XT, a, e, rg, b, lam1, lam2w, lip, inner_tol, max_inner):
        m = e - a
        n = rg.shape[0]
        z = b.copy()
        bn = np.empty(m)
        fit = np.empty(n)
        t = 1.0
        for _ in range(max_inner):
            _xg_times(XT, a, e, z, fit)
            for i in range(n):
                fit[i] = rg[i] - fit[i]
            nrm2 = 0.0
            for k in range(m):
                u = z[k] + _dot(XT[a + k], fit) / lip
                au = abs(u) - lam1 / lip
                if au > 0.0:
                    bn[k] = au if u > 0.0 else -au
                else:
                    bn[k] = 0.0
                nrm2 += bn[k] * bn[k]
            nrm = math.sqrt(nrm2)
            t2 = lam2w / lip
            if nrm <= t2:
                bn[:] = 0.0
            else:
                scale = 1.0 - t2 / nrm
                for k in range(m):
                    bn[k] *= scale
            change = 0.0
            restart = 0.0
            for k in range(m):
                dk = bn[k] - b[k]
                if abs(dk) > change:
                    change = abs(dk)
                restart += (z[k] - bn[k]) * dk
            tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            if restart > 0.0:
                tn = 1.0
                for k in range(m):
                    z[k] = bn[k]
            else:
                mom = (t - 1.0) / tn
                for k in range(m):
                    z[k] = bn[k] + mom * (bn[k] - b[k])
            for k in range(m):
                b[k] = bn[k]
            t = tn
            if change < inner_tol:
                break
        return b

    @njit(cache=True)
    def sgl_bcd_nb(XT, r, beta, gptr, wts, lam1, lam2, lips, tol, max_outer,
                   inner_tol, max_inner):
        G = gptr.shape[0] - 1
        n = r.shape[0]
        rg = np.empty(n)
        for sweep in range(1, max_outer + 1):
            dmax = 0.0
            for g in range(G):
                a = gptr[g]
                e = gptr[g + 1]
                m = e - a
                old = beta[a:e].copy()
                for i in range(n):
                    rg[i] = r[i]
                for k in range(m):
                    if old[k] != 0.0:
                        _axpy(old[k], XT[a + k], rg)
                ss = 0.0
                for k in range(m):
                    c = abs(_dot(XT[a + k], rg)) - lam1
                    if c > 0.0:
                        ss += c * c
                lw = lam2 * wts[g]
                if ss <= lw * lw:
                    new = np.zeros(m)
                else:
                    new = _sgl_block_nb(XT, a, e, rg, old.copy(), lam1, lw,
                                        lips[g], inner_tol, max_inner)
                d = 0.0
                for k in range(m):
                    if abs(new[k] - old[k]) > d:
                        d = abs(new[k] - old[k])
                if d > 0.0:
                    for i in range(n):
                        r[i] = rg[i]
                    for k in range(m):
                        beta[a + k] = new[k]
                        if new[k] != 0.0:
                            _axpy(-new[k], XT[a + k], r)
                    if d > dmax:
                        dmax = d
            if dmax < tol:
                return sweep, True
        return max_outer, False

    @njit(cache=True)
    def vb_sweep_nb(XT, r, alpha, mu, s2, logit_q, norm2, sigma2, tau2, order):
        dmax = 0.0
        for idx in range(order.shape[0]):
            j = order[idx]
            nj = norm2[j]
            s2j = sigma2 / (nj + sigma2 / tau2)
            old = alpha[j] * mu[j]
            muj = s2j / sigma2 * (_dot(XT[j], r) + nj * old)
            lo = logit_q[j] + 0.5 * math.log(s2j / tau2) + muj * muj / (2.0 * s2j)
            if lo >= 0.0:
                aj = 1.0 / (1.0 + math.exp(-lo))
            else:
                ex = math.exp(lo)
                aj = ex / (1.0 + ex)
            d = aj * muj - old
            if d != 0.0:
                _axpy(-d, XT[j], r)
            da = abs(aj - alpha[j])
            if da > dmax:
                dmax = da
            alpha[j] = aj
            mu[j] = muj
            s2[j] = s2j
        return dmax


if USE_NUMBA:
    cd_lasso = cd_lasso_nb
    sgl_bcd = sgl_bcd_nb
    vb_sweep = vb_sweep_nb
else:
    cd_lasso = cd_lasso_np
    sgl_bcd = sgl_bcd_np
    vb_sweep = vb_sweep_np


def backend() -> str:
    """Name of the active kernel backend (``"numba"`` or ``"numpy"``)."""
    return "numba" if USE_NUMBA else "numpy"
