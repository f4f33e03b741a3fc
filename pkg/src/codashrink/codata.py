"""Datasets, co-data sources and their encoding into a co-data matrix Z.

Z has one row per co-data parameter and one column per feature. Column
``Z[:, j]`` is what the adaptation function sees for feature ``j``; penalties
are ``lambda_j = exp(Z[:, j] @ alpha)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class CoDataError(ValueError):
    """Invalid dataset or co-data input."""


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float, order="C")
        y = np.array(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise CoDataError("X must be a 2-d array")
        n, p = X.shape
        if n < 2:
            raise CoDataError(f"need at least 2 samples, got {n}")
        if y.shape[0] != n:
            raise CoDataError(f"y has length {y.shape[0]}, X has {n} rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise CoDataError("X and y must be finite")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def centered(self) -> "Dataset":
        """Copy with column-centred X and centred y (absorbs an intercept)."""
        return Dataset(self.X - self.X.mean(axis=0), self.y - self.y.mean())

    def standardized(self) -> "Dataset":
        """Centred copy with unit-variance columns; constant columns left at 0."""
        Xc = self.X - self.X.mean(axis=0)
        sd = Xc.std(axis=0)
        sd[sd == 0] = 1.0
        return Dataset(Xc / sd, self.y - self.y.mean())


@dataclass(frozen=True)
class CoDataSource:
    """One co-data source: ``kind`` is ``"grouped"`` or ``"continuous"``.

    Grouped values are integer labels 1..G, each used at least once.
    """

    kind: str
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in ("grouped", "continuous"):
            raise CoDataError(f"unknown co-data kind {self.kind!r}")
        vals = np.asarray(self.values)
        if vals.ndim != 1:
            raise CoDataError("co-data values must be a vector")
        if kind == "grouped":
            if vals.size and not np.all(np.equal(np.mod(vals, 1), 0)):
                raise CoDataError("grouped co-data must hold integer labels")
            vals = vals.astype(np.int64)
            _check_contiguous(vals)
        else:
            vals = vals.astype(float)
            if not np.all(np.isfinite(vals)):
                raise CoDataError("continuous co-data must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "values", vals)

    @classmethod
    def grouped(cls, assignments, label: str = "groups") -> "CoDataSource":
        return cls("grouped", np.asarray(assignments), label)

    @classmethod
    def continuous(cls, values, label: str = "continuous") -> "CoDataSource":
        return cls("continuous", np.asarray(values, dtype=float), label)

    def __len__(self) -> int:
        return self.values.shape[0]


def _check_contiguous(assignments: np.ndarray) -> int:
    if assignments.size == 0:
        raise CoDataError("empty group assignment")
    G = int(assignments.max())
    if assignments.min() < 1:
        raise CoDataError("group labels must start at 1")
    present = np.zeros(G + 1, dtype=bool)
    present[assignments] = True
    missing = np.flatnonzero(~present[1:]) + 1
    if missing.size:
        raise CoDataError(f"group(s) {missing.tolist()} missing; labels must be 1..G")
    return G


@dataclass(frozen=True)
class GroupStructure:
    """Group labels (1..G) per feature plus the group sizes."""

    assignments: np.ndarray
    sizes: np.ndarray

    @property
    def G(self) -> int:
        return self.sizes.shape[0]

    @property
    def p(self) -> int:
        return self.assignments.shape[0]

    def members(self, g: int) -> np.ndarray:
        """Zero-based feature indices of group ``g`` (1-based label)."""
        return np.flatnonzero(self.assignments == g)

    @classmethod
    def from_assignments(cls, assignments) -> "GroupStructure":
        return to_group_structure(CoDataSource.grouped(assignments))


def to_group_structure(source: CoDataSource) -> GroupStructure:
    if source.kind != "grouped":
        raise CoDataError("group structure needs a grouped co-data source")
    a = source.values
    G = _check_contiguous(a)
    sizes = np.bincount(a, minlength=G + 1)[1:]
    return GroupStructure(a.copy(), sizes)


@dataclass(frozen=True)
class CoDataMatrix:
    Z: np.ndarray
    row_labels: tuple[str, ...]
    has_intercept: bool = True
    warnings: tuple[str, ...] = field(default=())

    @property
    def C(self) -> int:
        return self.Z.shape[0]

    @property
    def p(self) -> int:
        return self.Z.shape[1]

    @classmethod
    def intercept_only(cls, p: int) -> "CoDataMatrix":
        return cls(np.ones((1, p)), ("intercept",), True)

    def group_indicator_columns(self) -> np.ndarray | None:
        """Group id per feature if Z is intercept + one-hot for one grouping.

        Returns zero-based group ids (group 0 is the absorbed first group) or
        ``None`` when Z holds anything other than a single grouped source.
        """
        Z = self.Z
        if not self.has_intercept or not np.all(Z[0] == 1.0):
            return None
        rest = Z[1:]
        if rest.size and not np.all((rest == 0.0) | (rest == 1.0)):
            return None
        if rest.size and np.any(rest.sum(axis=0) > 1.0):
            return None
        ids = np.zeros(self.p, dtype=np.int64)
        for c in range(rest.shape[0]):
            ids[rest[c] == 1.0] = c + 1
        return ids


def encode_codata(sources: Sequence[CoDataSource], p: int,
                  standardize: bool = True) -> CoDataMatrix:
    """Stack co-data sources into Z with a leading all-ones row.

    A grouped source with G groups adds G-1 indicator rows (the first group
    is carried by the intercept). A continuous source adds one row, centred
    and scaled to unit sample standard deviation when ``standardize``.
    """
    if len(sources) == 0:
        raise CoDataError("at least one co-data source is required")
    rows = [np.ones(p)]
    labels = ["intercept"]
    flags: list[str] = []
    for k, src in enumerate(sources):
        if len(src) != p:
            raise CoDataError(
                f"co-data source {k} ({src.label!r}) has length {len(src)}, expected {p}")
        name = src.label or f"source{k}"
        if src.kind == "grouped":
            gs = to_group_structure(src)
            for g in range(2, gs.G + 1):
                rows.append((src.values == g).astype(float))
                labels.append(f"{name}[{g}]")
        else:
            v = src.values.astype(float)
            if standardize:
                if v.size < 2 or np.ptp(v) == 0:
                    raise CoDataError(
                        f"continuous co-data {name!r} is constant; cannot standardize")
                v = (v - v.mean()) / v.std(ddof=1)
            rows.append(v)
            labels.append(name)
    if len(rows) == 1:
        flags.append("intercept_only")
        warnings.warn("co-data encodes to an intercept-only Z", stacklevel=2)
    Z = np.vstack(rows)
    Z.flags.writeable = False
    return CoDataMatrix(Z, tuple(labels), True, tuple(flags))
