"""CSV readers and writers.

Formats:

* design: headerless numeric CSV, one row per sample;
* response / vectors: one number per line;
* co-data: first line ``<label>,<kind>`` with kind ``grouped`` or
  ``continuous``, then one value per feature per line.

Floats are written with ``repr`` so files round-trip exactly and repeated
runs produce identical bytes.
"""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .codata import CoDataError, CoDataSource


class DataFileError(ValueError):
    """Malformed or unreadable input file (reports file and line)."""


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def _parse_float(tok: str, path, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise DataFileError(f"{path}:{lineno}: not a number: {tok.strip()!r}") from None


def _lines(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise DataFileError(f"cannot read {path}: {e.strerror}") from None
    return [(i + 1, r) for i, r in enumerate(rows) if r and any(t.strip() for t in r)]


def read_matrix(path) -> np.ndarray:
    rows = _lines(path)
    if not rows:
        raise DataFileError(f"{path}: file is empty")
    width = len(rows[0][1])
    out = np.empty((len(rows), width))
    for k, (lineno, r) in enumerate(rows):
        if len(r) != width:
            raise DataFileError(f"{path}:{lineno}: expected {width} fields, found {len(r)}")
        out[k] = [_parse_float(t, path, lineno) for t in r]
    return out


def read_vector(path) -> np.ndarray:
    rows = _lines(path)
    if not rows:
        raise DataFileError(f"{path}: file is empty")
    vals = []
    for lineno, r in rows:
        if len(r) != 1:
            raise DataFileError(f"{path}:{lineno}: expected one value, found {len(r)}")
        vals.append(_parse_float(r[0], path, lineno))
    return np.array(vals)


def read_codata(path) -> CoDataSource:
    rows = _lines(path)
    if not rows:
        raise DataFileError(f"{path}: file is empty")
    lineno, head = rows[0]
    if len(head) != 2:
        raise DataFileError(f"{path}:{lineno}: header must be '<label>,<kind>'")
    label, kind = head[0].strip(), head[1].strip().lower()
    if kind not in ("grouped", "continuous"):
        raise DataFileError(f"{path}:{lineno}: kind must be 'grouped' or 'continuous', got {kind!r}")
    vals = []
    for lineno, r in rows[1:]:
        if len(r) != 1:
            raise DataFileError(f"{path}:{lineno}: expected one value, found {len(r)}")
        v = _parse_float(r[0], path, lineno)
        if kind == "grouped" and v != int(v):
            raise DataFileError(f"{path}:{lineno}: group label must be an integer")
        vals.append(v)
    if not vals:
        raise DataFileError(f"{path}: no values after the header")
    try:
        if kind == "grouped":
            return CoDataSource.grouped(np.array(vals, dtype=np.int64), label)
        return CoDataSource.continuous(np.array(vals), label)
    except CoDataError as e:
        raise DataFileError(f"{path}: {e}") from None


def write_rows(path, rows, header=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def write_matrix(path, X) -> None:
    write_rows(path, np.asarray(X))


def write_vector(path, v, header=None) -> None:
    write_rows(path, ([x] for x in np.asarray(v).ravel()), header)


def write_codata(path, src: CoDataSource) -> None:
    vals = src.values.astype(np.int64) if src.kind == "grouped" else src.values
    with open(path, "w", newline="") as fh:
        fh.write(f"{src.label},{src.kind}\n")
        for v in vals:
            fh.write(_fmt(v) + "\n")


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, (Path, os.PathLike)):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
