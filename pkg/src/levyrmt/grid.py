"""Tabulated functions on a 1-D grid and their CSV/JSON serialisation."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FLOAT_FMT = "{:.17g}"


@dataclass(frozen=True)
class TailModel:
    """Power-law tails rho(x) ~ amp_plus x**-exponent (x -> +inf), amp_minus |x|**-exponent (x -> -inf)."""

    exponent: float
    amp_plus: float
    amp_minus: float


@dataclass
class GridFunction:
    x: np.ndarray
    y: np.ndarray
    name: str = "y"
    tail: TailModel | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ValueError("x and y must be 1-D arrays of equal length")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("grid must be strictly increasing")

    def __call__(self, xs):
        return np.interp(xs, self.x, self.y)

    def integral(self):
        """Trapezoid integral over the grid plus the analytic tail mass if a tail model is set."""
        total = float(np.trapezoid(self.y, self.x))
        if self.tail is not None:
            t = self.tail
            e = t.exponent - 1.0
            total += t.amp_plus * self.x[-1] ** (-e) / e
            total += t.amp_minus * abs(self.x[0]) ** (-e) / e
        return total


def write_csv(path, columns: dict, header_comment: str | None = None):
    """Write equal-length columns with a header row, 17 significant digits."""
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("columns must have equal length")
    with path.open("w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(n):
            w.writerow([_fmt(c[i]) for c in cols])
    return path


def _fmt(v):
    if isinstance(v, (str, bytes)):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FLOAT_FMT.format(float(v))


def read_csv(path) -> dict:
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    r = csv.reader(lines)
    names = next(r)
    rows = [list(map(float, row)) for row in r]
    arr = np.array(rows, dtype=float).reshape(-1, len(names))
    return {n: arr[:, i] for i, n in enumerate(names)}


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
