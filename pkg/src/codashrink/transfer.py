"""Second-moment matching from fitted ridge variances to other priors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TransferResult:
    inclusion_probs: np.ndarray
    q_bar: float
    clipped_count: int
    scale_C: float


def ridge_to_lasso_rates(v) -> np.ndarray:
    """Double-exponential rates with variance ``v``: ``sqrt(2 / v)``."""
    v = np.asarray(v, dtype=float)
    if np.any(~(v > 0)):
        raise ValueError("ridge variances must be strictly positive")
    return np.sqrt(2.0 / v)


def _clipped_mean(C, v, eps):
    return float(np.mean(np.clip(C * v, eps, 1.0 - eps)))


def ridge_to_inclusion_probs(v, q_bar: float = 0.01, eps: float = 1e-6) -> TransferResult:
    """Spike-and-slab inclusion probabilities ``q_j = C v_j`` with mean ``q_bar``.

    The spike-and-slab variance is ``q_j * tau2``, so matching it to ``v_j``
    fixes ``q_j`` up to a constant; ``C`` is then chosen so that the clipped
    probabilities in ``[eps, 1 - eps]`` average exactly to ``q_bar``.
    """
    v = np.asarray(v, dtype=float)
    if not 0.0 < q_bar < 1.0:
        raise ValueError("q_bar must lie in (0, 1)")
    if not 0.0 < eps <= 1e-3:
        raise ValueError("eps must lie in (0, 1e-3]")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("ridge variances must be finite and non-negative")
    if not np.any(v > 0):
        raise ValueError("all ridge variances are zero")
    if not eps < q_bar < 1.0 - eps:
        raise ValueError(f"q_bar={q_bar} is infeasible with clipping bound {eps}")
    p = v.shape[0]
    C = q_bar * p / v.sum()
    q = C * v
    if np.all((q >= eps) & (q <= 1.0 - eps)):
        return TransferResult(q, q_bar, 0, float(C))

    # clipped mean is continuous and non-decreasing in C; bracket then bisect
    lo, hi = 0.0, C
    while _clipped_mean(hi, v, eps) < q_bar:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _clipped_mean(mid, v, eps) < q_bar:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    # with the clipping pattern fixed, C solves a linear equation exactly
    C = 0.5 * (lo + hi)
    for _ in range(5):
        q = C * v
        low = q <= eps
        high = q >= 1.0 - eps
        mid = ~(low | high)
        vm = v[mid].sum()
        if vm == 0:
            break
        Cn = (q_bar * p - eps * low.sum() - (1.0 - eps) * high.sum()) / vm
        if Cn == C:
            break
        C = Cn
    q = np.clip(C * v, eps, 1.0 - eps)
    clipped = int(np.sum((C * v <= eps) | (C * v >= 1.0 - eps)))
    return TransferResult(q, q_bar, clipped, float(C))
