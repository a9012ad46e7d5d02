"""Typed access to the solver's delimited output files.

The solver writes a ``timeseries.csv`` per run (one row per accepted
step) and a ``rates.csv`` per convergence study.  Both are plain comma
files with a header line; cells may be blank where a quantity does not
exist at that row (the second-difference estimator on a first step, the
error columns on problems without an exact solution, the first rate of
a study).  Blank cells load as NaN.
"""

import math
from pathlib import Path

import numpy as np


class MissingColumnError(KeyError):
    """A requested column is not in the file's header."""

    def __init__(self, name, path, available):
        super().__init__(name)
        self.name = name
        self.path = str(path)
        self.available = tuple(available)

    def __str__(self):
        return ("no column %r in %s (file has: %s)"
                % (self.name, self.path, ", ".join(self.available)))


def _read_rows(path):
    with open(path) as fh:
        names = fh.readline().strip().split(",")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            cells = line.rstrip("\n").split(",")
            if len(cells) != len(names):
                raise ValueError(
                    "%s line %d has %d fields, header has %d"
                    % (path, lineno, len(cells), len(names)))
            rows.append(cells)
    if not rows:
        raise ValueError("%s has a header but no data rows" % path)
    return names, rows


def _to_float(cell):
    return float(cell) if cell else math.nan


class TimeSeries:
    """Columns of one ``timeseries.csv``, keyed by header name.

    Construction validates the structural guarantees every solver run
    provides: rectangular rows and strictly increasing ``t``.
    """

    def __init__(self, columns, path="<memory>"):
        lengths = {len(v) for v in columns.values()}
        if len(lengths) > 1:
            raise ValueError("columns of %s have unequal lengths %s"
                             % (path, sorted(lengths)))
        if "t" not in columns:
            raise MissingColumnError("t", path, columns)
        t = columns["t"]
        if not np.all(np.diff(t) > 0):
            raise ValueError("t is not strictly increasing in %s" % path)
        self.path = str(path)
        self._columns = {name: np.asarray(v, dtype=float)
                         for name, v in columns.items()}

    @classmethod
    def from_csv(cls, path):
        names, rows = _read_rows(path)
        return cls({name: np.array([_to_float(r[j]) for r in rows])
                    for j, name in enumerate(names)}, path=path)

    @property
    def names(self):
        return tuple(self._columns)

    def __len__(self):
        return len(self._columns["t"])

    def column(self, name):
        try:
            return self._columns[name]
        except KeyError:
            raise MissingColumnError(name, self.path, self._columns) \
                from None


def load_rates(path):
    """(k, error) arrays from a study's ``rates.csv``.

    The rate column is the solver's own successive-ratio fit and is not
    needed for plotting; it is ignored here.  Nonpositive k or error
    cannot sit on log axes and flags a malformed file.
    """
    names, rows = _read_rows(path)
    for required in ("k", "u_err_l2"):
        if required not in names:
            raise MissingColumnError(required, path, names)
    k = np.array([_to_float(r[names.index("k")]) for r in rows])
    err = np.array([_to_float(r[names.index("u_err_l2")]) for r in rows])
    if not (np.all(k > 0) and np.all(err > 0)):
        raise ValueError("%s has nonpositive k or error values" % path)
    return k, err
