"""Box-constrained limited-memory BFGS with a backtracking line search.

Small, dependency-free minimiser for the hyperparameter problems in
:mod:`codashrink.ridge_eb`. Unlike scipy's L-BFGS-B it treats non-finite
objective values as rejected trial points and backtracks, which matters when
a trial step makes the marginal covariance numerically singular.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    pg_norm: float
    converged: bool
    iterations: int
    message: str
    trace: list[float] = field(default_factory=list)


def projected_gradient(x, g, lo, hi):
    pg = g.copy()
    pg[(x <= lo) & (g > 0)] = 0.0
    pg[(x >= hi) & (g < 0)] = 0.0
    return pg


def _two_loop(g, S, Y):
    q = g.copy()
    rhos = [1.0 / (y @ s) for s, y in zip(S, Y)]
    alphas = []
    for s, y, rho in zip(reversed(S), reversed(Y), reversed(rhos)):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if S:
        gamma = (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
        q *= gamma
    for (s, y, rho), a in zip(zip(S, Y, rhos), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def minimize_lbfgs(fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
                   x0, lower=None, upper=None, maxiter: int = 500,
                   gtol: float = 1e-6, memory: int = 10,
                   max_backtracks: int = 60, ftol: float = 1e-13,
                   stall_window: int = 10) -> OptimResult:
    """Minimise ``fun`` (returning value and gradient) subject to box bounds.

    Converged means the projected gradient sup-norm dropped below ``gtol``.
    The accepted objective sequence is non-increasing: a step is taken when it
    satisfies the Armijo condition, or when it does not increase the objective
    and shrinks the projected gradient (needed near the optimum where Armijo
    decrease drowns in rounding). Iteration also stops, unconverged, once the
    objective improved by less than ``ftol * max(1, |f|)`` over the last
    ``stall_window`` iterations.
    """
    x = np.asarray(x0, dtype=float).copy()
    k = x.shape[0]
    lo = np.full(k, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(k, np.inf) if upper is None else np.asarray(upper, dtype=float)
    x = np.clip(x, lo, hi)
    f, g = fun(x)
    if not np.isfinite(f):
        raise FloatingPointError("objective is not finite at the starting point")
    S: list[np.ndarray] = []
    Y: list[np.ndarray] = []
    trace = [float(f)]
    message = "maximum iterations reached"
    converged = False
    it = 0
    for it in range(1, maxiter + 1):
        pg = projected_gradient(x, g, lo, hi)
        pgn = float(np.max(np.abs(pg))) if k else 0.0
        if pgn < gtol:
            converged = True
            message = "projected gradient below tolerance"
            it -= 1
            break
        blocked = pg == 0.0
        gf = np.where(blocked, 0.0, g)
        d = _two_loop(gf, S, Y)
        d[blocked] = 0.0
        if not np.all(np.isfinite(d)) or d @ gf >= 0.0:
            S.clear()
            Y.clear()
            d = -gf
        t = 1.0
        if not S:
            t = min(1.0, 1.0 / max(pgn, 1e-300))
        accepted = False
        for _ in range(max_backtracks):
            xn = np.clip(x + t * d, lo, hi)
            if np.array_equal(xn, x):
                break
            fn, gn = fun(xn)
            if np.isfinite(fn) and np.all(np.isfinite(gn)):
                armijo = fn <= f + 1e-4 * (g @ (xn - x))
                if armijo:
                    accepted = True
                elif fn <= f:
                    pgn_new = np.max(np.abs(projected_gradient(xn, gn, lo, hi)))
                    accepted = pgn_new < pgn
                if accepted:
                    break
            t *= 0.5
        if not accepted:
            if S:
                S.clear()
                Y.clear()
                continue
            message = "line search failed"
            break
        s = xn - x
        yv = gn - g
        if s @ yv > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            S.append(s)
            Y.append(yv)
            if len(S) > memory:
                S.pop(0)
                Y.pop(0)
        x, f, g = xn, fn, gn
        trace.append(float(f))
        if (len(trace) > stall_window
                and trace[-1 - stall_window] - f <= ftol * max(1.0, abs(f))):
            message = "objective stalled"
            break
    pg = projected_gradient(x, g, lo, hi)
    pgn = float(np.max(np.abs(pg))) if k else 0.0
    if pgn < gtol:
        converged = True
    return OptimResult(x, float(f), g, pgn, converged, it, message, trace)
