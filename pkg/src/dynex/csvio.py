"""Deterministic CSV emission for trajectories.

Floats are rendered with Python's shortest round-trip representation, so the
same trajectory produces byte-identical output on every platform and run.
"""

from __future__ import annotations

from typing import Sequence

from .engine import Trajectory
from .errors import SinkError, UnknownColumn


def format_csv(trajectory: Trajectory, columns: Sequence[str]) -> str:
    """The CSV text: a ``time`` column plus the requested variables."""
    columns = list(columns)
    series = []
    for name in columns:
        if name not in trajectory:
            raise UnknownColumn(f"column {name!r} not recorded in trajectory")
        series.append(trajectory[name])
    lines = [",".join(["time"] + columns)]
    times = trajectory.times
    for i in range(trajectory.n_rows):
        cells = [repr(float(times[i]))]
        cells.extend(repr(float(col[i])) for col in series)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(trajectory: Trajectory, columns: Sequence[str], sink) -> int:
    """Write the CSV to a file-like sink; returns the number of UTF-8 bytes."""
    text = format_csv(trajectory, columns)
    data = text.encode("utf-8")
    try:
        try:
            sink.write(text)
        except TypeError:
            sink.write(data)
    except OSError as exc:
        raise SinkError(f"failed to write CSV: {exc}") from exc
    return len(data)
