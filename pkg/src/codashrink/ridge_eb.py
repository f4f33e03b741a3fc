"""Empirical-Bayes ridge: Gaussian marginal likelihood and its maximisation.

Model: ``y ~ N(0, Sigma)`` with ``Sigma = X diag(v) X^T + sigma2 I``. Prior
variances are linked to co-data by ``v_j = exp(-Z[:, j] @ alpha)``, i.e. the
ridge penalty is ``lambda_j = exp(Z[:, j] @ alpha)``. Everything is computed in
the n x n formulation; no p x p matrix is ever formed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .codata import CoDataMatrix, Dataset
from .optim import minimize_lbfgs

LOG2PI = math.log(2.0 * math.pi)

SIGMA2_FLOOR = 1e-8
V_CEIL = 1e8
# non-intercept co-data coefficients are boxed so |alpha_c * z_cj| <= this
ALPHA_SPAN = 30.0
# grouped evaluation caches one n x n kernel per distinct Z column
_GROUPED_MAX_ENTRIES = 25_000_000


class NumericalError(ArithmeticError):
    """Marginal covariance is numerically singular or an objective blew up."""


@dataclass
class ShrinkConfig:
    """Targeted Laplace shrinkage of group log-penalties.

    ``target_log_lambda=None`` means: use the single-penalty estimate.
    """

    enabled: bool = False
    target_log_lambda: float | None = None
    scale: float = 1.0
    smooth_c: float = 1e-8

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("shrinkage scale must be positive")
        if self.smooth_c <= 0:
            raise ValueError("smooth_c must be positive")


@dataclass
class PenaltyFit:
    alpha: np.ndarray
    v: np.ndarray
    sigma2: float
    logml: float
    converged: bool
    iterations: int
    objective: float = float("nan")
    grad_norm: float = float("nan")
    at_bounds: tuple[str, ...] = ()
    trace: list[float] = field(default_factory=list, repr=False)
    row_labels: tuple[str, ...] = ()

    @property
    def log_lambda(self) -> np.ndarray:
        return -np.log(self.v)

    def to_dict(self) -> dict:
        v = self.v
        return {
            "alpha": [float(a) for a in self.alpha],
            "row_labels": list(self.row_labels),
            "sigma2": float(self.sigma2),
            "logml": float(self.logml),
            "objective": float(self.objective),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "grad_norm": float(self.grad_norm),
            "at_bounds": list(self.at_bounds),
            "v_summary": {
                "min": float(v.min()), "q25": float(np.quantile(v, 0.25)),
                "median": float(np.median(v)), "q75": float(np.quantile(v, 0.75)),
                "max": float(v.max()), "p": int(v.shape[0]),
            },
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _cholesky(S):
    try:
        return linalg.cho_factor(S, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalError("marginal covariance is not positive definite") from exc


def log_marglik(d: Dataset, v, sigma2: float) -> float:
    """Gaussian log marginal likelihood of ``y`` for prior variances ``v``."""
    v = np.broadcast_to(np.asarray(v, dtype=float), (d.p,))
    if np.any(v <= 0) or sigma2 <= 0:
        raise ValueError("prior variances and sigma2 must be positive")
    S = (d.X * v) @ d.X.T
    S[np.diag_indices_from(S)] += sigma2
    if not np.all(np.isfinite(S)):
        raise NumericalError("marginal covariance overflowed")
    cf = _cholesky(S)
    logdet = 2.0 * np.sum(np.log(np.diag(cf[0])))
    quad = d.y @ linalg.cho_solve(cf, d.y, check_finite=False)
    return -0.5 * (d.n * LOG2PI + logdet + quad)


class MarginalLikelihood:
    """Value and gradient of the log marginal likelihood in ``(alpha, log sigma2)``.

    Features sharing a co-data column share a prior variance. When there are
    few distinct columns (grouped co-data) the per-column kernels
    ``X_u X_u^T`` are cached and each evaluation costs O(n^3 + U n^2);
    otherwise each evaluation costs O(n^2 p).
    """

    def __init__(self, d: Dataset, Z, mode: str = "auto"):
        Z = np.asarray(Z.Z if isinstance(Z, CoDataMatrix) else Z, dtype=float)
        if Z.ndim != 2 or Z.shape[1] != d.p:
            raise ValueError("Z must have one column per feature")
        self.d = d
        self.Z = Z
        n, p = d.n, d.p
        uniq, inv = np.unique(Z, axis=1, return_inverse=True)
        inv = np.asarray(inv).ravel()
        U = uniq.shape[1]
        if mode == "auto":
            mode = "grouped" if (U < p and U * n * n <= _GROUPED_MAX_ENTRIES) else "features"
        self.mode = mode
        if mode == "grouped":
            self.Zu = uniq
            self.inv = inv
            self.K = np.empty((U, n, n))
            for u in range(U):
                Xu = d.X[:, inv == u]
                self.K[u] = Xu @ Xu.T
        elif mode != "features":
            raise ValueError(f"unknown evaluation mode {mode!r}")
        self.nevals = 0

    def variances(self, alpha) -> np.ndarray:
        return np.exp(-(self.Z.T @ alpha))

    def value_grad(self, alpha, log_sigma2):
        """Return ``(ell, d ell / d alpha, d ell / d log sigma2)``."""
        self.nevals += 1
        d = self.d
        n = d.n
        s2 = math.exp(log_sigma2)
        if self.mode == "grouped":
            vu = np.exp(-(self.Zu.T @ alpha))
            S = np.tensordot(vu, self.K, axes=1)
        else:
            v = np.exp(-(self.Z.T @ alpha))
            S = (d.X * v) @ d.X.T
        S[np.diag_indices_from(S)] += s2
        if not np.all(np.isfinite(S)):
            raise NumericalError("marginal covariance overflowed")
        cf = _cholesky(S)
        logdet = 2.0 * np.sum(np.log(np.diag(cf[0])))
        a = linalg.cho_solve(cf, d.y, check_finite=False)
        ell = -0.5 * (n * LOG2PI + logdet + d.y @ a)
        if self.mode == "grouped":
            Sinv = linalg.cho_solve(cf, np.eye(n), check_finite=False)
            tr = np.einsum("ij,uij->u", Sinv, self.K)
            quad = (self.K @ a) @ a
            gv = -0.5 * (tr - quad)
            g_alpha = self.Zu @ (-vu * gv)
            trinv = np.trace(Sinv)
        else:
            W = linalg.cho_solve(cf, d.X, check_finite=False)
            diagq = np.einsum("ij,ij->j", d.X, W)
            b = d.X.T @ a
            gv = -0.5 * (diagq - b * b)
            g_alpha = self.Z @ (-v * gv)
            Linv = linalg.solve_triangular(cf[0], np.eye(n), lower=True,
                                           check_finite=False)
            trinv = np.sum(Linv * Linv)
        g_ls2 = -0.5 * s2 * (trinv - a @ a)
        return ell, g_alpha, g_ls2


def log_marglik_grad(d: Dataset, Z, alpha, log_sigma2: float) -> np.ndarray:
    """Gradient of the log marginal likelihood w.r.t. ``(alpha, log sigma2)``."""
    _, ga, gs = MarginalLikelihood(d, Z).value_grad(np.asarray(alpha, float), log_sigma2)
    return np.append(ga, gs)


def _scales(d: Dataset):
    s = float(d.y @ d.y) / d.n
    if s <= 0:
        s = 1.0
    tx = float(np.sum(d.X * d.X)) / (d.n * d.p)
    if tx <= 0:
        tx = 1.0
    return s, tx


def _bounds(d: Dataset):
    """Box for (log lambda, log sigma2) from the numerical floors."""
    s, tx = _scales(d)
    vunit = s / tx
    log_lam = (-math.log(V_CEIL * vunit), -math.log(SIGMA2_FLOOR * vunit))
    log_s2 = (math.log(SIGMA2_FLOOR * s), math.log(V_CEIL * s))
    return log_lam, log_s2


def _bound_flags(x_loglam, x_ls2, log_lam_b, log_s2_b):
    flags = []
    if x_ls2 <= log_s2_b[0]:
        flags.append("sigma2_lower")
    if x_ls2 >= log_s2_b[1]:
        flags.append("sigma2_upper")
    if x_loglam >= log_lam_b[1]:
        flags.append("lambda_upper")
    if x_loglam <= log_lam_b[0]:
        flags.append("lambda_lower")
    return tuple(flags)


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def fit_single_penalty(d: Dataset, maxiter: int = 500, gtol: float = 1e-6) -> PenaltyFit:
    """Maximise the marginal likelihood over one common penalty and sigma2.

    Uses the eigendecomposition of ``X X^T`` so each evaluation is O(n).
    """
    n = d.n
    evals, U = linalg.eigh(d.X @ d.X.T)
    evals = np.clip(evals, 0.0, None)
    yt2 = (U.T @ d.y) ** 2

    def negll(x):
        v = math.exp(-x[0])
        s2 = math.exp(x[1])
        e = v * evals + s2
        ell = -0.5 * (n * LOG2PI + np.sum(np.log(e)) + np.sum(yt2 / e))
        dv = -0.5 * np.sum(evals / e - yt2 * evals / e ** 2)
        ds2 = -0.5 * np.sum(1.0 / e - yt2 / e ** 2)
        return -ell, -np.array([-v * dv, s2 * ds2])

    s, tx = _scales(d)
    sy = float(d.y @ d.y) / n
    if sy <= 0:
        sy = s
    txn = float(np.sum(d.X * d.X)) / n
    v0 = 0.5 * sy / txn if txn > 0 else 1.0
    x0 = np.array([-math.log(v0), math.log(0.5 * sy)])
    lam_b, s2_b = _bounds(d)
    lo = np.array([lam_b[0], s2_b[0]])
    hi = np.array([lam_b[1], s2_b[1]])
    res = minimize_lbfgs(negll, x0, lo, hi, maxiter=maxiter, gtol=gtol)
    v = math.exp(-res.x[0])
    return PenaltyFit(
        alpha=np.array([res.x[0]]),
        v=np.full(d.p, v),
        sigma2=math.exp(res.x[1]),
        logml=-res.fun,
        converged=res.converged,
        iterations=res.iterations,
        objective=-res.fun,
        grad_norm=res.pg_norm,
        at_bounds=_bound_flags(res.x[0], res.x[1], lam_b, s2_b),
        trace=[-t for t in res.trace],
        row_labels=("intercept",),
    )


def shrinkage_penalty(log_lambda_groups, target: float, scale: float = 1.0,
                      smooth_c: float = 1e-8):
    """Smoothed Laplace log-prior penalty and its gradient per group.

    ``sum_g sqrt((log lambda_g - target)^2 + c) / scale``; subtracted from the
    log marginal likelihood.
    """
    dev = np.asarray(log_lambda_groups, dtype=float) - target
    root = np.sqrt(dev * dev + smooth_c)
    return float(np.sum(root)) / scale, dev / root / scale


def _group_map(Zm: CoDataMatrix) -> np.ndarray:
    """Matrix A with ``log lambda_groups = A @ alpha`` for a one-hot Z."""
    ids = Zm.group_indicator_columns()
    if ids is None:
        raise ValueError("targeted shrinkage needs Z to encode exactly one grouped source")
    C = Zm.C
    A = np.zeros((C, C))
    A[:, 0] = 1.0
    A[np.arange(1, C), np.arange(1, C)] = 1.0
    return A


def fit_codata_alpha(d: Dataset, Z: CoDataMatrix, shrink: ShrinkConfig | None = None,
                     maxiter: int = 500, gtol: float = 1e-6,
                     single: PenaltyFit | None = None, mode: str = "auto") -> PenaltyFit:
    """Maximise the (optionally shrinkage-penalised) marginal likelihood over alpha.

    Starts from ``alpha = (log lambda_common, 0, ..., 0)``, where the common
    penalty comes from :func:`fit_single_penalty` (pass ``single`` to reuse one).
    """
    if not isinstance(Z, CoDataMatrix):
        Z = CoDataMatrix(np.asarray(Z, dtype=float),
                         tuple(f"z{c}" for c in range(np.shape(Z)[0])))
    shrink = shrink or ShrinkConfig()
    Zarr = Z.Z
    C = Z.C
    if Z.p != d.p:
        raise ValueError(f"Z has {Z.p} columns, data has {d.p} features")
    if not Z.has_intercept or not np.all(Zarr[0] == 1.0):
        raise ValueError("Z must start with an intercept row")
    if np.linalg.matrix_rank(Zarr) < C:
        raise ValueError("co-data matrix is rank deficient")
    if single is None:
        single = fit_single_penalty(d, maxiter=maxiter, gtol=gtol)
    A = None
    target = 0.0
    if shrink.enabled:
        A = _group_map(Z)
        target = single.alpha[0] if shrink.target_log_lambda is None else shrink.target_log_lambda

    model = MarginalLikelihood(d, Zarr, mode=mode)

    def negobj(x):
        try:
            ell, ga, gs = model.value_grad(x[:C], x[C])
        except NumericalError:
            return math.inf, np.zeros_like(x)
        g = np.append(ga, gs)
        if A is not None:
            pen, gpen = shrinkage_penalty(A @ x[:C], target, shrink.scale, shrink.smooth_c)
            ell = ell - pen
            g[:C] -= A.T @ gpen
        return -ell, -g

    lam_b, s2_b = _bounds(d)
    lo = np.full(C + 1, -np.inf)
    hi = np.full(C + 1, np.inf)
    lo[0], hi[0] = lam_b
    lo[C], hi[C] = s2_b
    for c in range(1, C):
        span = ALPHA_SPAN / max(np.max(np.abs(Zarr[c])), 1e-12)
        lo[c], hi[c] = -span, span
    x0 = np.zeros(C + 1)
    x0[0] = single.alpha[0]
    x0[C] = math.log(single.sigma2)
    res = minimize_lbfgs(negobj, x0, lo, hi, maxiter=maxiter, gtol=gtol)
    alpha = res.x[:C].copy()
    ell = model.value_grad(alpha, res.x[C])[0]
    return PenaltyFit(
        alpha=alpha,
        v=model.variances(alpha),
        sigma2=math.exp(res.x[C]),
        logml=float(ell),
        converged=res.converged,
        iterations=res.iterations,
        objective=-res.fun,
        grad_norm=res.pg_norm,
        at_bounds=_bound_flags(res.x[0], res.x[C], lam_b, s2_b) if C == 1 else
        _bound_flags(0.0, res.x[C], (-math.inf, math.inf), s2_b),
        trace=[-t for t in res.trace],
        row_labels=Z.row_labels,
    )
