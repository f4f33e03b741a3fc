"""Sparse group-lasso baseline by block coordinate descent.

Objective::

    0.5 * ||y - X b||^2 + mix * lam * ||b||_1
                        + (1 - mix) * lam * sum_g w_g ||b_g||_2

Each block is first tested for being optimally zero; otherwise it is solved
by accelerated proximal gradient with the fixed step ``1 / ||X_g||_2^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .codata import Dataset, GroupStructure
from .lasso import (NOT_ENTERED, CoefPath, SelectionResult, SolverError,
                    select_to_size, soft_threshold)


@dataclass
class SGLProblem:
    d: Dataset
    groups: GroupStructure
    lam: float
    alpha_mix: float = 0.95
    group_weights: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.alpha_mix <= 1.0:
            raise ValueError("alpha_mix must lie in [0, 1]")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.groups.p != self.d.p:
            raise ValueError("group structure does not match the data")
        if self.group_weights is None:
            self.group_weights = np.sqrt(self.groups.sizes.astype(float))
        self.group_weights = np.asarray(self.group_weights, dtype=float)
        if self.group_weights.shape != (self.groups.G,) or np.any(self.group_weights <= 0):
            raise ValueError("group weights must be positive, one per group")

    @property
    def lam1(self) -> float:
        return self.alpha_mix * self.lam

    @property
    def lam2(self) -> float:
        return (1.0 - self.alpha_mix) * self.lam

    def with_lambda(self, lam: float) -> "SGLProblem":
        out = SGLProblem(self.d, self.groups, lam, self.alpha_mix, self.group_weights)
        out._cache = self._cache
        return out

    def layout(self):
        """Group-contiguous feature order, transposed design and step sizes."""
        if "order" not in self._cache:
            a = self.groups.assignments
            order = np.argsort(a, kind="stable")
            gptr = np.concatenate([[0], np.cumsum(self.groups.sizes)]).astype(np.int64)
            XT = np.ascontiguousarray(self.d.X[:, order].T)
            lips = np.empty(self.groups.G)
            for g in range(self.groups.G):
                blk = XT[gptr[g]:gptr[g + 1]]
                lips[g] = np.linalg.norm(blk, 2) ** 2 if blk.size else 1.0
            lips[lips == 0] = 1.0
            self._cache.update(order=order, gptr=gptr, XT=XT, lips=lips)
        c = self._cache
        return c["order"], c["gptr"], c["XT"], c["lips"]

    def objective(self, beta) -> float:
        r = self.d.y - self.d.X @ beta
        gn = np.array([np.linalg.norm(beta[self.groups.assignments == g + 1])
                       for g in range(self.groups.G)])
        return (0.5 * float(r @ r) + self.lam1 * float(np.abs(beta).sum())
                + self.lam2 * float(self.group_weights @ gn))

    def kkt_violation(self, beta) -> float:
        """Largest block optimality violation at ``beta``."""
        c = self.d.X.T @ (self.d.y - self.d.X @ beta)
        worst = 0.0
        for g in range(self.groups.G):
            idx = self.groups.assignments == g + 1
            bg, cg = beta[idx], c[idx]
            lw = self.lam2 * self.group_weights[g]
            nb = np.linalg.norm(bg)
            if nb == 0:
                worst = max(worst, np.linalg.norm(soft_threshold(cg, self.lam1)) - lw)
                continue
            nz = bg != 0
            expect = self.lam1 * np.sign(bg[nz]) + lw * bg[nz] / nb
            if nz.any():
                worst = max(worst, float(np.max(np.abs(cg[nz] - expect))))
            if (~nz).any():
                worst = max(worst, float(np.max(np.abs(cg[~nz]))) - self.lam1)
        return max(worst, 0.0)


def group_zero_check(prob: SGLProblem, g: int, residual) -> bool:
    """True iff group ``g`` (0-based) is optimally zero given the partial residual."""
    idx = prob.groups.assignments == g + 1
    c = prob.d.X[:, idx].T @ np.asarray(residual, dtype=float)
    s = soft_threshold(c, prob.lam1)
    return bool(np.linalg.norm(s) <= prob.lam2 * prob.group_weights[g])


@dataclass
class SGLResult:
    beta: np.ndarray
    sweeps: int
    converged: bool


def sgl_fit(prob: SGLProblem, beta0=None, tol: float = 1e-7, max_outer: int = 10_000,
            inner_tol: float = 1e-10, max_inner: int = 50_000) -> SGLResult:
    order, gptr, XT, lips = prob.layout()
    d = prob.d
    beta = np.zeros(d.p) if beta0 is None else np.array(beta0, dtype=float)
    bperm = beta[order].copy()
    r = d.y - d.X @ beta if np.any(beta) else d.y.copy()
    sweeps, ok = _kernels.sgl_bcd(XT, r, bperm, gptr, prob.group_weights, prob.lam1,
                                  prob.lam2, lips, tol, max_outer, inner_tol, max_inner)
    out = np.empty(d.p)
    out[order] = bperm
    return SGLResult(out, int(sweeps), bool(ok))


def _group_lambda_max(c, mix, w):
    """Smallest lam with ||S(c, mix*lam)||_2 <= (1-mix)*lam*w."""
    a = np.abs(c)
    if a.size == 0 or a.max() == 0:
        return 0.0
    if mix >= 1.0:
        return float(a.max())
    if mix <= 0.0:
        return float(np.linalg.norm(a) / w)

    def excess(lam):
        s = np.maximum(a - mix * lam, 0.0)
        return math.sqrt(float(s @ s)) - (1.0 - mix) * lam * w

    lo, hi = 0.0, float(a.max()) / mix
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return hi


def lambda_max(d: Dataset, groups: GroupStructure, alpha_mix: float = 0.95,
               group_weights=None) -> float:
    w = np.sqrt(groups.sizes.astype(float)) if group_weights is None else group_weights
    c = d.X.T @ d.y
    return max(_group_lambda_max(c[groups.assignments == g + 1], alpha_mix, w[g])
               for g in range(groups.G))


def sgl_path(d: Dataset, groups: GroupStructure, alpha_mix: float = 0.95,
             grid_size: int = 100, ratio: float = 1e-3, stop_after: int | None = None,
             group_weights=None) -> CoefPath:
    lm = lambda_max(d, groups, alpha_mix, group_weights)
    if lm == 0:
        raise ValueError("X^T y is zero; the path is empty")
    grid = lm * np.logspace(0.0, np.log10(ratio), grid_size)
    prob = SGLProblem(d, groups, lm, alpha_mix, group_weights)
    entry = np.full(d.p, NOT_ENTERED, dtype=np.int64)
    betas = []
    beta = np.zeros(d.p)
    for k, lam in enumerate(grid):
        if k > 0:  # zero is optimal at lambda_max
            res = sgl_fit(prob.with_lambda(lam), beta)
            if not res.converged:
                raise SolverError(f"sparse group-lasso did not converge at lambda={lam:g}")
            beta = res.beta
        betas.append(beta.copy())
        new = (beta != 0) & (entry == NOT_ENTERED)
        entry[new] = k
        if stop_after is not None and np.sum(entry != NOT_ENTERED) >= stop_after:
            break
    return CoefPath(grid[:len(betas)], np.array(betas), entry)


def sgl_path_to_size(d: Dataset, groups: GroupStructure, p_sel: int,
                     alpha_mix: float = 0.95, grid_size: int = 100, ratio: float = 1e-3,
                     max_extend: int = 2) -> CoefPath:
    for k in range(max_extend + 1):
        cp = sgl_path(d, groups, alpha_mix, grid_size * (k + 1), ratio ** (k + 1),
                      stop_after=p_sel)
        if cp.n_entered >= p_sel:
            break
    return cp


def sgl_path_select(d: Dataset, groups: GroupStructure, p_sel: int,
                    alpha_mix: float = 0.95, grid_size: int = 100,
                    ratio: float = 1e-3) -> SelectionResult:
    if p_sel == 0:
        return SelectionResult(np.zeros(0, dtype=np.int64), np.zeros(d.p),
                               CoefPath(np.zeros(0), np.zeros((0, d.p)),
                                        np.full(d.p, NOT_ENTERED)), np.zeros(0))
    cp = sgl_path_to_size(d, groups, p_sel, alpha_mix, grid_size, ratio)
    sel = select_to_size(cp, p_sel)
    return SelectionResult(sel, cp.betas[-1], cp, np.array([alpha_mix]))
