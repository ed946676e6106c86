"""Trace files: CSV or JSON data plus a JSON metadata sidecar.

Numbers are written with 9 significant digits and fields in a fixed order,
so re-reading and re-writing a file reproduces it byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

COLUMNS = ("sweep", "signal", "sigma")
FORMATS = ("csv", "json")


def fmt(v: float) -> str:
    return f"{float(v):.9g}"


def _round(v):
    return float(fmt(v))


@dataclass(frozen=True)
class TraceRecord:
    """One sweep: x values, mean signal and its 1-sigma statistical error."""

    sweep: np.ndarray
    signal: np.ndarray
    sigma: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float).ravel() for a in (self.sweep, self.signal, self.sigma)]
        if len({a.size for a in arrs}) != 1:
            raise ValueError("sweep, signal and sigma must have equal length")
        if np.any(arrs[2] < 0):
            raise ValueError("sigma must be non-negative")
        for name, a in zip(COLUMNS, arrs):
            object.__setattr__(self, name, a)

    def weights(self) -> np.ndarray | None:
        """Errors usable as fit weights, or None when the trace is noiseless."""
        return self.sigma if np.all(self.sigma > 0) else None


def dumps_csv(rec: TraceRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in zip(rec.sweep, rec.signal, rec.sigma):
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def dumps_json(rec: TraceRecord) -> str:
    data = {name: [_round(v) for v in getattr(rec, name)] for name in COLUMNS}
    return json.dumps(data, indent=1) + "\n"


def write_trace(rec: TraceRecord, path: str | Path, fmt_name: str = "csv") -> Path:
    if fmt_name not in FORMATS:
        raise ValueError(f"unknown format {fmt_name!r}")
    path = Path(path)
    text = dumps_csv(rec) if fmt_name == "csv" else dumps_json(rec)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_sidecar(path: str | Path, meta: dict) -> Path:
    """Metadata next to a trace; adds a UTC timestamp."""
    out = sidecar_path(path)
    body = {**meta, "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    out.write_text(json.dumps(body, indent=1, sort_keys=True) + "\n")
    return out


def read_trace(path: str | Path) -> TraceRecord:
    """Load a CSV (``sweep,signal,sigma`` header; sigma optional) or JSON trace."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        data = json.loads(text)
        cols = [np.asarray(data[c], dtype=float) for c in ("sweep", "signal")]
        sigma = np.asarray(data.get("sigma", np.zeros_like(cols[0])), dtype=float)
    else:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError(f"{path}: empty trace file")
        header = [h.strip() for h in rows[0]]
        if header[:2] != ["sweep", "signal"]:
            raise ValueError(f"{path}: header must start with 'sweep,signal'")
        body = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        if body.size == 0:
            raise ValueError(f"{path}: no data rows")
        cols = [body[:, 0], body[:, 1]]
        sigma = body[:, 2] if body.shape[1] > 2 else np.zeros(len(body))
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
    return TraceRecord(cols[0], cols[1], sigma, meta)


def dumps_report(report: dict) -> str:
    return json.dumps(_rounded(report), indent=1, sort_keys=True) + "\n"


def _rounded(obj):
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj
