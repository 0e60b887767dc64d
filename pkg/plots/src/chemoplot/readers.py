"""Loaders for the simulation CLI's output files.

Two file shapes exist: column series (`counts.csv`, `msd.csv`) with one
header line of column names, and square snapshots (`hist_*_t{k}.csv`,
`field_t{k}.csv`) whose first line is a comment carrying the snapshot time,
the matrix size, and the domain interval:

    # t=<time> bins=<n> domain=<lo>,<hi>

Every loader raises PlotDataError with the offending path in the message,
so the command-line tools can fail with a single clear line.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class PlotDataError(Exception):
    """An input file is missing, empty, or not in the documented format."""


@dataclass(frozen=True)
class Snapshot:
    """One square matrix tagged with its time and spatial extent."""

    t: float
    lo: float
    hi: float
    values: np.ndarray  # (n, n), rows indexed by y bin, columns by x bin


_HEADER = re.compile(
    r"#\s*t=(?P<t>\S+)\s+bins=(?P<bins>\d+)\s+domain=(?P<lo>[^,]+),(?P<hi>\S+)")


def read_table(path) -> np.ndarray:
    """A named-column CSV series as a structured array (1-D, >= 1 row)."""
    path = Path(path)
    if not path.is_file():
        raise PlotDataError(f"missing input file: {path}")
    try:
        table = np.genfromtxt(path, delimiter=",", names=True)
    except ValueError as exc:
        raise PlotDataError(f"cannot parse {path}: {exc}") from exc
    if table.dtype.names is None:
        raise PlotDataError(f"no header line in {path}")
    table = np.atleast_1d(table)
    if table.size == 0 or np.all(np.isnan(table[table.dtype.names[0]])):
        raise PlotDataError(f"no data rows in {path}")
    return table


def read_snapshot(path) -> Snapshot:
    """One snapshot file: tagged comment line plus a bins x bins matrix."""
    path = Path(path)
    if not path.is_file():
        raise PlotDataError(f"missing input file: {path}")
    with open(path) as fh:
        first = fh.readline()
    match = _HEADER.match(first)
    if match is None:
        raise PlotDataError(f"{path} does not start with a snapshot header")
    values = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    bins = int(match["bins"])
    if values.shape != (bins, bins):
        raise PlotDataError(f"{path}: expected a {bins}x{bins} matrix, "
                            f"found {values.shape}")
    return Snapshot(t=float(match["t"]), lo=float(match["lo"]),
                    hi=float(match["hi"]), values=values)


def snapshot_series(run_dir, stem: str) -> list[Snapshot]:
    """The four snapshots `<stem>_t0.csv` .. `<stem>_t3.csv` of one run."""
    return [read_snapshot(Path(run_dir) / f"{stem}_t{k}.csv")
            for k in range(4)]


def read_manifest(run_dir) -> dict | None:
    """The run's manifest.json, or None if absent or unreadable."""
    path = Path(run_dir) / "manifest.json"
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError):
        return None
