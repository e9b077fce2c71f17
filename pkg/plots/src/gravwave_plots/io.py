"""Readers for the run-directory file contract."""

import csv
import json
import re
from pathlib import Path

import numpy as np


class PlotDataError(Exception):
    """Input data missing or unusable for the requested figure."""


class MissingColumnError(PlotDataError):
    def __init__(self, column, path):
        super().__init__(f"column {column!r} not found in {path}")
        self.column = column


class EmptyWindowError(PlotDataError):
    def __init__(self, window, path):
        super().__init__(
            f"window [{window[0]:g}, {window[1]:g}] selects no samples from {path}"
        )
        self.window = window


class OverwriteError(PlotDataError):
    def __init__(self, path):
        super().__init__(f"{path} exists; pass --force to overwrite")


_PROBE = re.compile(r"^(absf|argf|phase_H|absg)_(.+)$")


def read_diagnostics(path):
    """Parse diagnostics.csv into {"columns": name -> array, "probes": labels}.

    A crash-aborted run can leave a final partial line; rows that fail to
    parse as floats are dropped from the tail.
    """
    path = Path(path)
    if not path.is_file():
        raise PlotDataError(f"no diagnostics.csv at {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotDataError(f"{path} is empty") from None
        rows = []
        for row in reader:
            if len(row) != len(header):
                break
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                break
    if not rows:
        raise PlotDataError(f"{path} has a header but no data rows")
    table = np.asarray(rows)
    columns = {name: table[:, i] for i, name in enumerate(header)}
    probes = []
    for name in header:
        m = _PROBE.match(name)
        if m and m.group(1) == "absf":
            probes.append(m.group(2))
    return {"columns": columns, "probes": probes, "path": path}


def read_analysis(path):
    path = Path(path)
    if not path.is_file():
        raise PlotDataError(
            f"no analysis.json at {path}; run the analyzer on the directory first"
        )
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as err:
            raise PlotDataError(f"{path} is not valid JSON: {err}") from None


def column(diag, name):
    cols = diag["columns"]
    if name not in cols:
        raise MissingColumnError(name, diag["path"])
    return cols[name]


def window_mask(times, window, path):
    if window is None:
        return np.ones(times.shape, dtype=bool)
    lo, hi = window
    mask = (times >= lo) & (times <= hi)
    if not np.any(mask):
        raise EmptyWindowError(window, path)
    return mask
