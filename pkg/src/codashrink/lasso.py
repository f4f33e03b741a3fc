"""Weighted (group-adaptive) lasso by cyclic coordinate descent.

Objective: ``0.5 * ||y - X b||^2 + sum_j gamma_j |b_j|``. A penalty path scales
the whole vector ``gamma`` by a decreasing multiplier ``t``, and model-size
selection uses the order in which features first enter along that path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .codata import CoDataSource, Dataset, GroupStructure, encode_codata
from .ridge_eb import ShrinkConfig, fit_codata_alpha, fit_single_penalty
from .transfer import ridge_to_lasso_rates

NOT_ENTERED = -1


class SolverError(RuntimeError):
    pass


class SelectionError(SolverError):
    """Fewer features entered the path than requested."""


def soft_threshold(z, g):
    return np.sign(z) * np.maximum(np.abs(z) - g, 0.0)


@dataclass
class WeightedLassoProblem:
    d: Dataset
    gamma: np.ndarray
    standardized: bool = False

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        gamma = np.broadcast_to(gamma, (self.d.p,)).copy()
        if not np.all(np.isfinite(gamma)) or np.any(gamma < 0):
            raise ValueError("penalties must be finite and non-negative")
        if not np.any(gamma > 0) and self.d.p > self.d.n:
            raise ValueError("all-zero penalties need p <= n")
        self.gamma = gamma
        if self.standardized:
            self.d = self.d.standardized()
        self._XT = np.ascontiguousarray(self.d.X.T)
        self._norm2 = np.einsum("ij,ij->j", self.d.X, self.d.X)
        bad = (self._norm2 == 0) & (self.gamma == 0)
        if np.any(bad):
            raise ValueError(f"zero-norm column(s) {np.flatnonzero(bad).tolist()} "
                             "with zero penalty")

    def objective(self, beta, t: float = 1.0) -> float:
        r = self.d.y - self.d.X @ beta
        return 0.5 * float(r @ r) + t * float(self.gamma @ np.abs(beta))

    def kkt_violation(self, beta, t: float = 1.0) -> float:
        """Largest violation of the lasso optimality conditions at ``beta``."""
        c = self.d.X.T @ (self.d.y - self.d.X @ beta)
        pen = t * self.gamma
        nz = beta != 0
        viol = np.where(nz, np.abs(c - pen * np.sign(beta)), np.maximum(np.abs(c) - pen, 0.0))
        return float(viol.max()) if viol.size else 0.0


@dataclass
class CDResult:
    beta: np.ndarray
    sweeps: int
    converged: bool


def cd_fit(prob: WeightedLassoProblem, beta0=None, t: float = 1.0, tol: float = 1e-7,
           max_sweeps: int = 100_000) -> CDResult:
    """Minimise the weighted lasso objective with penalties ``t * gamma``."""
    d = prob.d
    beta = np.zeros(d.p) if beta0 is None else np.array(beta0, dtype=float)
    r = d.y - d.X @ beta if np.any(beta) else d.y.copy()
    pen = t * prob.gamma
    sweeps, ok = _kernels.cd_lasso(prob._XT, r, beta, pen, prob._norm2, tol, max_sweeps)
    return CDResult(beta, int(sweeps), bool(ok))


@dataclass
class CoefPath:
    t_grid: np.ndarray
    betas: np.ndarray
    entry_order: np.ndarray

    @property
    def n_entered(self) -> int:
        return int(np.sum(self.entry_order != NOT_ENTERED))


def t_max(prob: WeightedLassoProblem) -> float:
    """Smallest multiplier at which every penalised coefficient is zero."""
    c = np.abs(prob.d.X.T @ prob.d.y)
    pos = prob.gamma > 0
    if not np.any(pos):
        raise ValueError("path needs at least one positive penalty")
    return float(np.max(c[pos] / prob.gamma[pos]))


def path(prob: WeightedLassoProblem, grid_size: int = 100, ratio: float = 1e-3,
         stop_after: int | None = None, tol: float = 1e-7) -> CoefPath:
    """Warm-started lasso path over ``t`` log-spaced from ``t_max`` to ``ratio * t_max``.

    With ``stop_after`` the path is cut at the first grid point where that many
    features have entered.
    """
    tm = t_max(prob)
    grid = tm * np.logspace(0.0, np.log10(ratio), grid_size)
    p = prob.d.p
    entry = np.full(p, NOT_ENTERED, dtype=np.int64)
    betas = []
    beta = np.zeros(p)
    for k, t in enumerate(grid):
        if k > 0:  # zero is optimal at t_max by definition
            res = cd_fit(prob, beta, t=t, tol=tol)
            if not res.converged:
                raise SolverError(f"coordinate descent did not converge at t={t:g}")
            beta = res.beta
        betas.append(beta.copy())
        new = (beta != 0) & (entry == NOT_ENTERED)
        entry[new] = k
        if stop_after is not None and np.sum(entry != NOT_ENTERED) >= stop_after:
            break
    return CoefPath(grid[:len(betas)], np.array(betas), entry)


def select_to_size(cpath: CoefPath, p_sel: int) -> np.ndarray:
    """First ``p_sel`` features to enter the path (0-based indices, entry order).

    Ties at one grid point go to the larger |beta| there, then the lower index.
    """
    p = cpath.entry_order.shape[0]
    if p_sel < 0 or p_sel > p:
        raise ValueError(f"p_sel must lie in [0, {p}]")
    if p_sel == 0:
        return np.zeros(0, dtype=np.int64)
    entered = np.flatnonzero(cpath.entry_order != NOT_ENTERED)
    if entered.size < p_sel:
        raise SelectionError(
            f"only {entered.size} features entered the path; need {p_sel}")
    k = cpath.entry_order[entered]
    mag = np.abs(cpath.betas[k, entered])
    order = np.lexsort((entered, -mag, k))
    return entered[order[:p_sel]]


@dataclass
class SelectionResult:
    selected: np.ndarray
    beta: np.ndarray
    path: CoefPath
    gamma: np.ndarray
    penalty_fit: object = None


def path_to_size(prob: WeightedLassoProblem, p_sel: int, grid_size: int = 100,
                 ratio: float = 1e-3, max_extend: int = 2) -> CoefPath:
    """Path cut once ``p_sel`` features entered; the grid floor is lowered
    (ratio squared, up to ``max_extend`` times) when too few enter."""
    for k in range(max_extend + 1):
        cp = path(prob, grid_size * (k + 1), ratio ** (k + 1), stop_after=p_sel)
        if cp.n_entered >= p_sel:
            break
    return cp


def lasso_select(d: Dataset, p_sel: int, gamma=None, grid_size: int = 100,
                 ratio: float = 1e-3) -> SelectionResult:
    """Plain (uniform-penalty) or fixed-weight lasso selection of ``p_sel`` features."""
    gamma = np.ones(d.p) if gamma is None else gamma
    prob = WeightedLassoProblem(d, gamma)
    cp = path_to_size(prob, p_sel, grid_size, ratio)
    sel = select_to_size(cp, p_sel)
    beta = cp.betas[-1] if len(cp.betas) else np.zeros(d.p)
    return SelectionResult(sel, beta, cp, prob.gamma)


def gal_penalties(d: Dataset, groups: GroupStructure, shrink: ShrinkConfig | None = None):
    """Per-feature lasso penalties from empirical-Bayes ridge group variances.

    Returns ``(gamma, penalty_fit)``. Equal penalties are returned as ones
    so the path is exactly the plain lasso path.
    """
    if groups.p != d.p:
        raise ValueError("group structure does not match the number of features")
    single = fit_single_penalty(d)
    if groups.G == 1:
        fit = single
    else:
        Z = encode_codata([CoDataSource.grouped(groups.assignments, "groups")], d.p)
        fit = fit_codata_alpha(d, Z, shrink, single=single)
    gamma = fit.sigma2 * ridge_to_lasso_rates(fit.v)
    if np.ptp(gamma) == 0:
        gamma = np.ones(d.p)
    return gamma, fit


def group_adaptive_lasso(d: Dataset, groups: GroupStructure, p_sel: int,
                         shrink: ShrinkConfig | None = None, grid_size: int = 100,
                         ratio: float = 1e-3) -> SelectionResult:
    """Group-adaptive lasso with group penalties from empirical-Bayes ridge.

    Ridge group variances are estimated by marginal likelihood (optionally
    with targeted shrinkage), converted to lasso rates by variance matching,
    and put on the least-squares scale via the estimated noise variance.
    """
    gamma, fit = gal_penalties(d, groups, shrink)
    res = lasso_select(d, p_sel, gamma, grid_size, ratio)
    res.penalty_fit = fit
    return res
