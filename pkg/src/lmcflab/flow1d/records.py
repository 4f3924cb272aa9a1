"""Serialisation of flow runs: CSV time series, JSON event logs, SVG frames.

All writers are deterministic: floats are written with ``repr`` and JSON
keys are sorted, so the same run produces byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import numpy as np

from .flow import Trajectory

__all__ = ["CSV_VERSION", "csv_columns", "trajectory_csv", "write_csv", "events_json",
           "write_events", "svg_frame", "emit_frames"]

CSV_VERSION = 1
FIXED_COLUMNS = ["t", "step", "length", "theta_min", "theta_max", "kappa_max", "n_components", "n_crossings"]


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _face_order(label):
    return (len(label), label)


def csv_columns(traj: Trajectory) -> List[str]:
    """Column names: the fixed block, then ``area:<face>``, ``rate:<face>``, ``val:<key>``."""
    labels = sorted({l for s in traj.samples for l in s["faces"]}, key=_face_order)
    keys = sorted({k for s in traj.samples for k in s["valuations"]})
    return (FIXED_COLUMNS + [f"area:{l}" for l in labels] + [f"rate:{l}" for l in labels]
            + [f"val:{k}" for k in keys])


def trajectory_csv(traj: Trajectory) -> str:
    """CSV text with a versioned ``#`` header comment.

    Face columns are empty while a face does not exist; valuation columns
    hold the exact rational valuation, empty when the crossing is absent or
    carries no cochain.
    """
    cols = csv_columns(traj)
    buf = io.StringIO()
    buf.write(f"# lmcflab flow time series, csv-version {CSV_VERSION}\n")
    buf.write(f"# fixed columns: {' '.join(FIXED_COLUMNS)}; then area:<face> rate:<face> val:<crossing>\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for s in traj.samples:
        row = []
        for c in cols:
            if c in FIXED_COLUMNS:
                row.append(_num(s[c]))
            elif c.startswith("area:") or c.startswith("rate:"):
                what, lab = c.split(":", 1)
                f = s["faces"].get(lab)
                row.append("" if f is None else _num(f[what]))
            else:
                row.append(_num(s["valuations"].get(int(c[4:]))))
        w.writerow(row)
    return buf.getvalue()


def write_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    path.write_text(trajectory_csv(traj))
    return path


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def events_json(traj: Trajectory) -> str:
    doc = {
        "status": traj.status,
        "info": _jsonable(traj.info),
        "events": [_jsonable(e.to_json()) for e in traj.events],
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def write_events(traj: Trajectory, path) -> Path:
    path = Path(path)
    path.write_text(events_json(traj))
    return path


_COLOURS = ["#1f4e79", "#a33b20", "#3b7a2a", "#7a3b8f", "#8f6b1f", "#20707a"]


def svg_frame(snapshot: dict, box, size: int = 480) -> str:
    """One SVG image of a snapshot, drawn in the fixed viewport ``box``.

    ``box`` is ``(xmin, ymin, xmax, ymax)`` in curve coordinates.
    """
    x0, y0, x1, y1 = box
    scale = size / max(x1 - x0, y1 - y0)

    def xy(p):
        return f"{(p[0] - x0) * scale:.3f},{(y1 - p[1]) * scale:.3f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<text x="8" y="18" font-family="monospace" font-size="13">t = {snapshot["t"]:.6f}</text>',
    ]
    for i, (v, P) in enumerate(zip(snapshot["components"], snapshot["periods"])):
        pts = " ".join(xy(p) for p in np.vstack([v, v[:1] + P]))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{_COLOURS[i % len(_COLOURS)]}" '
                   f'stroke-width="1.5"/>')
    for key, loc in snapshot["crossings"]:
        cx, cy = xy(loc).split(",")
        out.append(f'<circle cx="{cx}" cy="{cy}" r="3" fill="black"><title>crossing {key}</title></circle>')
    for lab, (kind, c) in sorted(snapshot["faces"].items(), key=lambda kv: _face_order(kv[0])):
        cx, cy = xy(c).split(",")
        out.append(f'<text x="{cx}" y="{cy}" font-family="monospace" font-size="11" '
                   f'text-anchor="middle">{lab}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_frames(traj: Trajectory, interval: float, directory, prefix: str = "frame",
                size: int = 480) -> List[Path]:
    """Write one SVG per ``interval`` of flow time from the run's snapshots.

    The first snapshot at or after each multiple of ``interval`` is drawn;
    all frames share one viewport so shrinking is visible.  A run without
    snapshots yields no files.

    Raises
    ------
    ValueError
        If ``interval`` is not positive or the run is not in the plane.
    """
    if not interval > 0:
        raise ValueError("interval must be positive")
    snaps = [s for s in traj.snapshots if s["components"]]
    if not snaps:
        return []
    if any(np.any(P != 0) for s in snaps for P in s["periods"]):
        raise ValueError("frames are drawn for plane runs only")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pts = np.vstack([v for s in snaps for v in s["components"]])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = 0.05 * float(max(hi - lo)) + 1e-12
    side = float(max(hi - lo)) + 2 * pad
    mid = 0.5 * (lo + hi)
    box = (mid[0] - side / 2, mid[1] - side / 2, mid[0] + side / 2, mid[1] + side / 2)
    chosen, nxt = [], 0.0
    for s in snaps:
        if s["t"] >= nxt - 1e-15:
            chosen.append(s)
            nxt = (math.floor(s["t"] / interval + 1e-9) + 1) * interval
    paths = []
    for i, s in enumerate(chosen):
        p = directory / f"{prefix}_{i:04d}.svg"
        p.write_text(svg_frame(s, box, size))
        paths.append(p)
    return paths
