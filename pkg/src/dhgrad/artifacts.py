"""Deterministic CSV / JSON writers and readers for run artifacts."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = ["fmt", "write_csv", "read_csv", "write_json", "write_columns", "read_columns"]


def fmt(x) -> str:
    """Shortest round-trip text for numbers; empty string for NaN."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return ""
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def write_csv(path, rows: Iterable[dict], columns: Sequence[str]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c, "")) for c in columns])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items() if not str(k).startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if obj is None or isinstance(obj, (int, str)):
        return obj
    return repr(obj)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_columns(path, header: Sequence[str], *cols) -> Path:
    """Whitespace-separated columns with a ``#`` header line (gnuplot friendly)."""
    path = Path(path)
    lines = ["# " + " ".join(header)]
    for vals in zip(*cols):
        lines.append(" ".join(fmt(v) if fmt(v) else "nan" for v in vals))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_columns(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().lstrip("#").split()
    data = np.loadtxt(path, comments="#", ndmin=2)
    return header, data
