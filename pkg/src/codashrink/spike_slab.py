"""Mean-field variational Bayes for the spike-and-slab linear model.

Model::

    y | beta ~ N(X beta, sigma2 I)
    beta_j   ~ (1 - q_j) delta_0 + q_j N(0, tau2)

The variational family factorises over features; feature ``j`` is in the
slab with probability ``incl_j`` and then ``N(mu_j, s2_j)``. Coordinate ascent
updates each triple exactly, so the ELBO never decreases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logit, xlogy

from . import _kernels
from .codata import CoDataMatrix, CoDataSource, Dataset, encode_codata
from .ridge_eb import PenaltyFit, ShrinkConfig, fit_codata_alpha, fit_single_penalty
from .transfer import TransferResult, ridge_to_inclusion_probs

LOG2PI = math.log(2.0 * math.pi)
RESIDUAL_REFRESH = 50
SIGMA2_FLOOR = 1e-8


class VBError(ArithmeticError):
    pass


@dataclass
class SSPrior:
    q: np.ndarray
    tau2: float

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).ravel()
        if np.any((self.q <= 0) | (self.q >= 1)):
            raise ValueError("prior inclusion probabilities must lie in (0, 1)")
        if not self.tau2 > 0:
            raise ValueError("slab variance tau2 must be positive")

    @classmethod
    def constant(cls, p: int, q: float, tau2: float) -> "SSPrior":
        return cls(np.full(p, q), tau2)


@dataclass
class VBPosterior:
    incl: np.ndarray
    mu: np.ndarray
    s2: np.ndarray
    sigma2: float
    elbo_trace: list[float] = field(default_factory=list)
    converged: bool = False
    sweeps: int = 0

    @property
    def posterior_mean(self) -> np.ndarray:
        return self.incl * self.mu


def _expected_rss(d: Dataset, post: VBPosterior, norm2=None) -> float:
    if norm2 is None:
        norm2 = np.einsum("ij,ij->j", d.X, d.X)
    r = d.y - d.X @ (post.incl * post.mu)
    a, m = post.incl, post.mu
    return float(r @ r + norm2 @ (a * (m * m + post.s2) - a * a * m * m))


def elbo(d: Dataset, prior: SSPrior, post: VBPosterior) -> float:
    """Evidence lower bound of the factorised posterior."""
    if prior.q.shape[0] != d.p or post.incl.shape[0] != d.p:
        raise ValueError("dimension mismatch between data, prior and posterior")
    s2n = post.sigma2
    erss = _expected_rss(d, post)
    val = -0.5 * d.n * (LOG2PI + math.log(s2n)) - erss / (2.0 * s2n)
    a, m, s2, q, t2 = post.incl, post.mu, post.s2, prior.q, prior.tau2
    val += float(np.sum(0.5 * a * (1.0 + np.log(s2 / t2) - (m * m + s2) / t2)))
    val -= float(np.sum(xlogy(a, a) - xlogy(a, q) + xlogy(1 - a, 1 - a) - xlogy(1 - a, 1 - q)))
    if not math.isfinite(val):
        raise VBError("ELBO is not finite")
    return val


def vb_fit(d: Dataset, prior: SSPrior, sigma2="estimate", tol: float = 1e-6,
           max_sweeps: int = 1000, order: str = "ascending", seed: int = 0,
           init: VBPosterior | None = None) -> VBPosterior:
    """Coordinate-ascent VB; ``sigma2`` is a fixed positive value or ``"estimate"``.

    When estimating, the noise variance is set after each sweep to the
    expected residual sum of squares over n, its ELBO maximiser.
    """
    p, n = d.p, d.n
    if prior.q.shape[0] != p:
        raise ValueError("prior has the wrong number of features")
    estimate = isinstance(sigma2, str)
    if estimate and sigma2 != "estimate":
        raise ValueError("sigma2 must be a positive number or 'estimate'")
    yy = float(d.y @ d.y) / n
    floor = SIGMA2_FLOOR * (yy if yy > 0 else 1.0)
    if estimate:
        s2n = init.sigma2 if init is not None else (yy if yy > 0 else 1.0)
    else:
        s2n = float(sigma2)
        if not s2n > 0:
            raise ValueError("fixed sigma2 must be positive")
    XT = np.ascontiguousarray(d.X.T)
    norm2 = np.einsum("ij,ij->j", d.X, d.X)
    tau2 = prior.tau2
    logit_q = logit(prior.q)
    if init is None:
        alpha = prior.q.copy()
        mu = np.zeros(p)
        s2 = s2n / (norm2 + s2n / tau2)
    else:
        alpha, mu, s2 = init.incl.copy(), init.mu.copy(), init.s2.copy()
    if order == "ascending":
        sweep_order = np.arange(p, dtype=np.int64)
        rng = None
    elif order == "random":
        rng = np.random.default_rng(seed)
        sweep_order = rng.permutation(p).astype(np.int64)
    else:
        raise ValueError("order must be 'ascending' or 'random'")

    post = VBPosterior(alpha, mu, s2, s2n)
    r = d.y - d.X @ (alpha * mu)
    trace = []
    converged = False
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        if rng is not None:
            sweep_order = rng.permutation(p).astype(np.int64)
        dmax = _kernels.vb_sweep(XT, r, alpha, mu, s2, logit_q, norm2, s2n, tau2,
                                 sweep_order)
        if sweep % RESIDUAL_REFRESH == 0:
            r = d.y - d.X @ (alpha * mu)
        if estimate:
            erss = float(r @ r + norm2 @ (alpha * (mu * mu + s2) - alpha * alpha * mu * mu))
            s2n = max(erss / n, floor)
            post.sigma2 = s2n
        trace.append(elbo(d, prior, post))
        if dmax < tol:
            converged = True
            break
    post.elbo_trace = trace
    post.converged = converged
    post.sweeps = sweep
    if not math.isfinite(trace[-1] if trace else 0.0):
        raise VBError("ELBO is not finite")
    return post


@dataclass
class GuidedResult:
    posterior: VBPosterior
    q: np.ndarray
    Z: CoDataMatrix | None
    penalty_fit: PenaltyFit | None
    transfer: TransferResult | None


def guided_ss_pipeline(d: Dataset, sources: Sequence[CoDataSource], q_bar: float = 0.01,
                       tau2: float = 0.25, sigma2="estimate", center: bool = True,
                       eps: float = 1e-6, shrink: ShrinkConfig | None = None,
                       tol: float = 1e-6, max_sweeps: int = 1000) -> GuidedResult:
    """Co-data guided spike-and-slab: ridge EB, variance matching, then VB.

    With no co-data (or co-data that encodes to an intercept only) every
    ``q_j`` equals ``q_bar`` and the fit is the constant-q benchmark.
    """
    dc = d.centered() if center else d
    Z = encode_codata(sources, d.p) if len(sources) else None
    fit = None
    tr = None
    if Z is None or Z.C == 1:
        q = np.full(d.p, q_bar)
    else:
        single = fit_single_penalty(dc)
        fit = fit_codata_alpha(dc, Z, shrink, single=single)
        tr = ridge_to_inclusion_probs(fit.v, q_bar, eps)
        q = tr.inclusion_probs
    post = vb_fit(dc, SSPrior(q, tau2), sigma2=sigma2, tol=tol, max_sweeps=max_sweeps)
    return GuidedResult(post, q, Z, fit, tr)
