"""CSV and summary writers for run logs and sweeps."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

RUN_COLUMNS = (
    "t", "vehicle", "px", "py", "vx", "vy", "T", "theta", "Tdot", "omega",
    "u1", "u2", "err", "S", "edges",
)
SWEEP_COLUMNS = ("threshold", "e_pos", "iqr_low", "iqr_high", "mean_set_size")


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_csv(log):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_COLUMNS)
    for s, t in enumerate(log.times):
        for i in range(log.cfg.N):
            x = log.states[s, i]
            u = log.inputs[s, i]
            w.writerow([
                repr(float(t)), i + 1,
                *(repr(float(v)) for v in x.reshape(-1)),
                repr(float(u[0])), repr(float(u[1])),
                repr(float(log.errors[s, i])), int(log.set_sizes[s, i]), log.edges[s],
            ])
    return buf.getvalue()


def summary_text(summary):
    lines = []
    for key, value in summary.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(repr(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def parse_summary(text):
    out = {}
    for line in text.splitlines():
        if ":" in line:
            key, value = line.split(":", 1)
            out[key.strip()] = value.strip()
    return out


def sweep_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([repr(float(row[c])) for c in SWEEP_COLUMNS])
    return buf.getvalue()
