"""CSV snapshot/fronts files and plots regenerated from them."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .fronts import FrontRecord, TrackingError, estimate_speed
from .params import ModelError
from .pde import Profile
from .schedule import Grid

SNAPSHOT_HEADER = ("x_km", "A", "M", "F", "MT")
FRONTS_HEADER = ("t_days", "front_x_km", "speed_estimate")


def fmt(v: float) -> str:
    """Full-precision decimal text (17 significant digits)."""
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return format(float(v), ".17g")


def write_snapshot(path, prof: Profile) -> None:
    mt = prof.MT if prof.MT is not None else np.zeros(prof.grid.cell_count)
    cols = (prof.grid.x, prof.A, prof.M, prof.F, mt)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SNAPSHOT_HEADER) + "\n")
        for row in zip(*cols):
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_snapshot(path) -> Profile:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(h.strip() for h in header) != SNAPSHOT_HEADER:
            raise ModelError(f"{path}: expected header {','.join(SNAPSHOT_HEADER)}")
        rows = np.array([[float(c) for c in r] for r in reader if r])
    if rows.ndim != 2 or rows.shape[0] < 3:
        raise ModelError(f"{path}: need at least 3 rows")
    x = rows[:, 0]
    if np.any(np.diff(x) <= 0):
        raise ModelError(f"{path}: x_km must be strictly increasing")
    grid = Grid(float(x[-1] - x[0]), len(x))
    if not np.allclose(x - x[0], grid.x, rtol=0, atol=1e-9 * max(1.0, grid.length)):
        raise ModelError(f"{path}: nodes are not uniformly spaced")
    return Profile(grid, rows[:, 1], rows[:, 2], rows[:, 3], rows[:, 4])


def trailing_speeds(records: Sequence[FrontRecord], span: float, direction: int = 1) -> list[float]:
    """Speed fitted over the trailing ``span`` days at each record (nan if too few)."""
    out = []
    for r in records:
        try:
            est = estimate_speed(records, (r.t - span, r.t), direction)
            out.append(est.speed)
        except TrackingError:
            out.append(float("nan"))
    return out


def write_fronts(path, records: Sequence[FrontRecord], speeds: Optional[Sequence[float]] = None) -> None:
    speeds = speeds if speeds is not None else [float("nan")] * len(records)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(FRONTS_HEADER) + "\n")
        for r, s in zip(records, speeds):
            fh.write(f"{fmt(r.t)},{fmt(r.x)},{fmt(s)}\n")


def read_fronts(path) -> list[tuple[float, float, float]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != FRONTS_HEADER:
            raise ModelError(f"{path}: expected header {','.join(FRONTS_HEADER)}")
        return [tuple(float(c) for c in r) for r in reader if r]


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return fmt(float(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def plot_snapshot_csv(csv_path, svg_path, fields: Sequence[str] = ("A", "F")) -> None:
    """Line plot of a snapshot file; reads nothing but the CSV."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "sitwave"  # stable element ids

    prof = read_snapshot(csv_path)
    fig, ax = plt.subplots(figsize=(6, 3.2))
    for name in fields:
        ax.plot(prof.grid.x, getattr(prof, name), label=name, lw=1.2)
    ax.set_xlabel("x (km)")
    ax.set_ylabel("individuals")
    ax.set_title(Path(csv_path).stem)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)
