"""CSV persistence for trajectories, certification traces, and tables.

RFC-4180 output: CRLF line endings, quoted fields only where needed, "."
as the decimal separator.  Floats are written with 17 significant digits so
every finite double round-trips bit-identically through write/read.  Writes
go to a temporary file in the target directory followed by os.replace, so
readers never observe a half-written artifact.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from typing import Iterable, List, Optional, Sequence

import numpy as np

__all__ = [
    "format_float",
    "write_table",
    "read_table",
    "write_trajectory_csv",
    "write_lyapunov_csv",
    "write_json",
]


def format_float(value) -> str:
    """17-significant-digit decimal form; exact for finite doubles."""
    return format(float(value), ".17g")


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write one CSV table atomically (temp file + rename)."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\r\n")
            writer.writerow(list(header))
            for row in rows:
                writer.writerow([_format_cell(cell) for cell in row])
        # mkstemp creates 0600; give the artifact normal umask-based permissions
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_table(path):
    """Read a CSV written by write_table: (header, list of string rows)."""
    with open(os.fspath(path), "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        rows = list(reader)
    if not rows:
        raise ValueError(f"empty CSV file: {path}")
    return rows[0], rows[1:]


def write_trajectory_csv(path, record, lyap: Optional[np.ndarray] = None) -> None:
    """Persist a trajectory as n,t,x*,v*,f with an optional lyap column."""
    d = record.dim
    header: List[str] = ["n", "t"]
    header += [f"x{i}" for i in range(d)]
    header += [f"v{i}" for i in range(d)]
    header.append("f")
    if lyap is not None:
        lyap = np.asarray(lyap, dtype=float)
        if lyap.shape[0] != record.x.shape[0]:
            raise ValueError(
                f"lyap column has {lyap.shape[0]} entries, trajectory has {record.x.shape[0]}"
            )
        header.append("lyap")

    def rows():
        for n in range(record.x.shape[0]):
            row = [int(record.steps[n]), record.times[n]]
            row += list(record.x[n])
            row += list(record.v[n])
            row.append(record.f[n])
            if lyap is not None:
                row.append(lyap[n])
            yield row

    write_table(path, header, rows())


def write_lyapunov_csv(path, trace) -> None:
    """Persist a certification trace as n,lyap,ratio,target,pass."""
    values = np.asarray(trace.values, dtype=float)
    ratios = trace.ratios()
    targets = np.asarray(trace.contraction_target, dtype=float)
    if targets.ndim == 0:
        targets = np.full(max(values.size - 1, 0), float(targets))
    violation_steps = set(int(idx) for idx, _ in trace.violations)

    def rows():
        for n in range(values.size):
            if n == 0:
                ratio, target = "", ""
            else:
                ratio = "" if np.isnan(ratios[n]) else ratios[n]
                target = targets[n - 1] if targets.size else ""
            ok = n not in violation_steps
            yield [n, values[n], ratio, target, ok]

    write_table(path, ["n", "lyap", "ratio", "target", "pass"], rows())


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")


def write_json(path: str, payload: dict) -> str:
    """Atomically write a JSON report (temp file + rename)."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, default=_json_default)
            fh.write("\n")
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path
