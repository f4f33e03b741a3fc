"""Seeded generators for the simulation designs.

Scenarios:

* ``main``: equal groups, the first ceil(G/3) carry signal, a Beta(2, 6)
  fraction of their features is non-zero with t3 effects rescaled to unit
  squared norm, Gaussian features and unit Gaussian noise.
* ``group_sparse``: as main but a fixed number of randomly chosen signal groups.
* ``null_groups``: as main with the non-zero positions permuted over all
  features, so the grouping carries no information.
* ``snp``: allele counts with uniform minor allele frequencies in
  [0.05, 0.5], 150 N(0, 0.25) effects, a signal-enriched two-group co-data
  source and external log p-values.

Each random component (features, coefficients, noise, placement, co-data)
uses its own named stream from :mod:`codashrink.rng`.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .codata import CoDataSource, Dataset, GroupStructure
from .rng import beta_variates, binomial2, stream, student_t3

SCENARIOS = ("main", "group_sparse", "null_groups", "snp")


@dataclass
class SimInstance:
    d: Dataset
    beta_true: np.ndarray
    scenario: str
    seed: int
    params: dict
    groups: GroupStructure | None = None
    codata: list[CoDataSource] = field(default_factory=list)
    noise: np.ndarray | None = None
    notes: tuple[str, ...] = ()

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta_true)

    def checksum(self) -> str:
        h = hashlib.sha256()
        for arr in (self.d.X, self.d.y, self.beta_true):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        if self.groups is not None:
            h.update(np.ascontiguousarray(self.groups.assignments, dtype="<i8").tobytes())
        for src in self.codata:
            h.update(np.ascontiguousarray(src.values, dtype="<f8").tobytes())
        return h.hexdigest()


def largest_divisible(p: int, G: int) -> int:
    """Largest p' <= p that G divides."""
    return (p // G) * G


def _equal_groups(p: int, G: int) -> GroupStructure:
    if G < 1 or p % G:
        raise ValueError(f"G={G} does not divide p={p}")
    return GroupStructure.from_assignments(np.repeat(np.arange(1, G + 1), p // G))


def _round_half_up(x):
    return np.floor(np.asarray(x) + 0.5).astype(np.int64)


def _grouped_coefficients(p: int, G: int, signal_groups, seed: int,
                          max_retries: int = 100) -> np.ndarray:
    size = p // G
    rng = stream(seed, "coefficients")
    k = len(signal_groups)
    for _ in range(max_retries):
        pi = beta_variates(rng, 2.0, 6.0, k)
        counts = _round_half_up(pi * size)
        if counts.sum() > 0:
            break
    else:
        raise RuntimeError("all signal groups rounded to zero non-zeros")
    beta = np.zeros(p)
    positions = [g * size + np.sort(rng.choice(size, c, replace=False))
                 for g, c in zip(signal_groups, counts)]
    pos = np.concatenate(positions)
    vals = student_t3(rng, pos.size)
    beta[pos] = vals / math.sqrt(float(vals @ vals))
    return beta


def _gaussian_design(n: int, p: int, seed: int):
    X = stream(seed, "features").standard_normal((n, p))
    eps = stream(seed, "noise").standard_normal(n)
    return X, eps


def _n_main_signal_groups(G: int) -> int:
    return math.ceil(G / 3)


def gen_main(n: int = 200, p: int = 1998, G: int = 3, seed: int = 0) -> SimInstance:
    if n < 2:
        raise ValueError("n must be at least 2")
    groups = _equal_groups(p, G)
    beta = _grouped_coefficients(p, G, range(_n_main_signal_groups(G)), seed)
    X, eps = _gaussian_design(n, p, seed)
    d = Dataset(X, X @ beta + eps)
    return SimInstance(d, beta, "main", seed, {"n": n, "p": p, "G": G}, groups,
                       [CoDataSource.grouped(groups.assignments, "groups")], eps)


def gen_group_sparse(n: int = 200, p: int = 9960, G: int = 60, n_signal_groups: int = 5,
                     seed: int = 0) -> SimInstance:
    if not 1 <= n_signal_groups <= G:
        raise ValueError("need 1 <= n_signal_groups <= G")
    groups = _equal_groups(p, G)
    chosen = np.sort(stream(seed, "signal_groups").choice(G, n_signal_groups, replace=False))
    beta = _grouped_coefficients(p, G, chosen, seed)
    X, eps = _gaussian_design(n, p, seed)
    d = Dataset(X, X @ beta + eps)
    params = {"n": n, "p": p, "G": G, "n_signal_groups": n_signal_groups}
    return SimInstance(d, beta, "group_sparse", seed, params, groups,
                       [CoDataSource.grouped(groups.assignments, "groups")], eps)


def gen_null_groups(n: int = 200, p: int = 1980, G: int = 60, seed: int = 0) -> SimInstance:
    groups = _equal_groups(p, G)
    base = _grouped_coefficients(p, G, range(_n_main_signal_groups(G)), seed)
    perm = stream(seed, "placement").permutation(p)
    beta = base[perm]
    X, eps = _gaussian_design(n, p, seed)
    d = Dataset(X, X @ beta + eps)
    return SimInstance(d, beta, "null_groups", seed, {"n": n, "p": p, "G": G}, groups,
                       [CoDataSource.grouped(groups.assignments, "groups")], eps)


def gen_snp(n: int = 500, p: int = 10000, seed: int = 0, n_signal: int = 150,
            tau2: float = 0.25, noise_sd: float = 0.0) -> SimInstance:
    """SNP design; response is noise-free unless ``noise_sd > 0``."""
    if p < n_signal:
        raise ValueError(f"p must be at least {n_signal}")
    notes: list[str] = []
    maf = 0.05 + 0.45 * stream(seed, "maf").random(p)
    X = binomial2(stream(seed, "features"), maf, (n, p))
    beta = np.zeros(p)
    beta[:n_signal] = math.sqrt(tau2) * stream(seed, "coefficients").standard_normal(n_signal)
    y = X @ beta
    eps = None
    if noise_sd > 0:
        eps = noise_sd * stream(seed, "noise").standard_normal(n)
        y = y + eps

    if p == 10000 and n_signal == 150:
        n_small, sig_small = 500, 100
    else:
        n_small = max(1, int(round(0.05 * p)))
        sig_small = min(n_small, int(round(n_signal * 2 / 3)))
        notes.append("codata_sizes_scaled")
    rng = stream(seed, "codata", "groups")
    sig_in = rng.choice(n_signal, sig_small, replace=False)
    null_in = n_signal + rng.choice(p - n_signal, n_small - sig_small, replace=False)
    grp = np.full(p, 2, dtype=np.int64)
    grp[sig_in] = 1
    grp[null_in] = 1

    rng = stream(seed, "codata", "pvalues")
    pv = rng.random(p)
    first = rng.random(n_signal) < 0.5
    pv_sig = np.where(first, beta_variates(rng, 0.1, 10.0, n_signal),
                      beta_variates(rng, 1.0, 5.0, n_signal))
    pv[:n_signal] = pv_sig
    pv = np.maximum(pv, np.finfo(float).tiny)

    codata = [CoDataSource.grouped(grp, "z1_groups"),
              CoDataSource.continuous(np.log(pv), "z2_logp")]
    params = {"n": n, "p": p, "n_signal": n_signal, "tau2": tau2, "noise_sd": noise_sd}
    return SimInstance(Dataset(X, y), beta, "snp", seed, params, None, codata, eps,
                       tuple(notes))


def generate(scenario: str, seed: int = 0, **params) -> SimInstance:
    """Dispatch by scenario name."""
    gens = {"main": gen_main, "group_sparse": gen_group_sparse,
            "null_groups": gen_null_groups, "snp": gen_snp}
    if scenario not in gens:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    return gens[scenario](seed=seed, **params)
