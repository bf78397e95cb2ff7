"""Front location and traveling-wave speed estimation."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .equilibria import sit_equilibria, sit_threshold, wild_equilibrium
from .params import ModelError, ModelParams
from .pde import Profile, StepControl, Trajectory, established_front, simulate
from .schedule import Grid, ReleaseSchedule

log = logging.getLogger(__name__)

TRANSIENT_DAYS = 125.0
EDGE_MARGIN = 10.0  # km; fronts closer than this to the domain ends feel the boundary


class TrackingError(ValueError):
    """Not enough usable front positions to fit a speed."""


@dataclass(frozen=True)
class FrontRecord:
    t: float
    x: float
    level: float


@dataclass(frozen=True)
class SpeedEstimate:
    """Signed speed in km/day; positive means the invasion advances."""

    speed: float
    r_squared: float
    window: tuple[float, float]
    n_points: int


def front_position(prof: Profile, level: float, field: str = "F",
                   invaded_side: str = "left") -> Optional[float]:
    """Level crossing of a field nearest the uninvaded region.

    With the population on the left the rightmost crossing is returned,
    otherwise the leftmost. Linear interpolation between nodes; ``None`` when
    the field never crosses ``level``.
    """
    if not level > 0:
        raise ModelError("front level must be > 0")
    u = getattr(prof, field)
    above = u >= level
    cross = np.flatnonzero(above[:-1] != above[1:])
    if cross.size == 0:
        return None
    i = int(cross[-1] if invaded_side == "left" else cross[0])
    x = prof.grid.x
    u0, u1 = u[i], u[i + 1]
    return float(x[i] + (level - u0) * (x[i + 1] - x[i]) / (u1 - u0))


def track_fronts(traj: Trajectory, level: float, field: str = "F",
                 invaded_side: str = "left") -> list[FrontRecord]:
    out = []
    for t, prof in zip(traj.times, traj.snapshots):
        x = front_position(prof, level, field, invaded_side)
        if x is not None:
            out.append(FrontRecord(float(t), x, level))
    return out


def estimate_speed(records: Sequence[FrontRecord], window: tuple[float, float],
                   direction: int = 1, domain: Optional[tuple[float, float]] = None,
                   edge_tol: float = 1e-6) -> SpeedEstimate:
    """Least-squares slope of front position against time inside ``window``.

    ``direction`` is +1 when invasion moves toward larger x and -1 otherwise.
    """
    lo, hi = window
    pts = [(r.t, r.x) for r in records if lo - 1e-9 <= r.t <= hi + 1e-9]
    if len(pts) < 5:
        raise TrackingError(f"need >= 5 front records in [{lo}, {hi}], got {len(pts)}")
    t = np.array([q[0] for q in pts])
    x = np.array([q[1] for q in pts])
    if domain is not None:
        at_edge = (np.abs(x - domain[0]) <= edge_tol) | (np.abs(x - domain[1]) <= edge_tol)
        if np.all(at_edge):
            raise TrackingError("front left the domain: every record sits at an edge")
    tm, xm = t.mean(), x.mean()
    stt = float(((t - tm) ** 2).sum())
    if stt == 0:
        raise TrackingError("records share one time stamp")
    slope = float(((t - tm) * (x - xm)).sum() / stt)
    resid = x - (xm + slope * (t - tm))
    sxx = float(((x - xm) ** 2).sum())
    r2 = 1.0 if sxx == 0 else max(0.0, 1.0 - float((resid**2).sum()) / sxx)
    return SpeedEstimate(direction * slope, min(r2, 1.0), (lo, hi), len(pts))


def fit_window(records: Sequence[FrontRecord], window: tuple[float, float],
               domain: tuple[float, float], margin: float = EDGE_MARGIN,
               transient: float = TRANSIENT_DAYS) -> tuple[float, float]:
    """Slide ``window`` back so it ends while the front is still interior.

    The window keeps its length but never starts before ``transient``. A front
    that stays at least ``margin`` km from both ends is fitted over ``window``
    unchanged.
    """
    lo, hi = window
    inside = [r.t for r in records
              if domain[0] + margin <= r.x <= domain[1] - margin and r.t <= hi + 1e-9]
    if not inside:
        raise TrackingError("front never sits in the interior of the domain")
    # end at the first exit after the transient, not at a later re-entry
    last = None
    for r in records:
        if r.t > hi + 1e-9:
            break
        interior = domain[0] + margin <= r.x <= domain[1] - margin
        if interior:
            last = r.t
        elif last is not None and last >= transient:
            break
    end = min(hi, last)
    if end >= hi - 1e-9:
        return (lo, hi)
    if end <= transient:
        raise TrackingError(f"front reaches the domain edge at t = {end:g}, before the transient ends")
    return (max(transient, end - (hi - lo)), end)


def plateau_level(p: ModelParams, mt: float) -> float:
    """Half the female density of the stable state the invasion settles on."""
    rep = sit_equilibria(p, mt)
    if rep.regime == "no_control":
        return 0.5 * wild_equilibrium(p).F
    if rep.regime == "below_threshold":
        return 0.5 * rep.get("E2").state.F
    raise ModelError(f"no invading plateau at mt = {mt} (regime {rep.regime})")


@dataclass(frozen=True)
class SweepConfig:
    """Shared settings for uniform-release speed sweeps."""

    length: float = 150.0
    dx: float = 0.1
    cfl_factor: float = 0.9
    front_age: float = 170.0
    t_end: float = 2000.0
    snapshot_every: float = 5.0
    window: tuple[float, float] = (1000.0, 2000.0)


def _speed_point(args):
    p, mt, cfg, initial = args
    grid = initial.grid
    ctl = StepControl.auto(p, grid, cfg.cfl_factor)
    sched = ReleaseSchedule(mode="uniform", mt=mt) if mt > 0 else ReleaseSchedule()
    traj = simulate(p, initial, ctl, sched, cfg.t_end, cfg.snapshot_every)
    level = plateau_level(p, mt)
    recs = track_fronts(traj, level)
    domain = (0.0, grid.length)
    return estimate_speed(recs, fit_window(recs, cfg.window, domain), domain=domain)


@dataclass
class SpeedCurve:
    rows: list[tuple[float, Optional[SpeedEstimate], str]]
    mt_critical: Optional[tuple[float, float]]

    def speeds(self) -> list[Optional[float]]:
        return [None if e is None else e.speed for _, e, _ in self.rows]


def speed_vs_mt_curve(p: ModelParams, mt_grid: Iterable[float], cfg: Optional[SweepConfig] = None,
                      workers: int = 1) -> SpeedCurve:
    """Front speed for each uniform sterile level, all started from one front.

    The critical level is bracketed between the last positive and the first
    negative speed.
    """
    cfg = cfg or SweepConfig()
    mts = [float(m) for m in mt_grid]
    _, MT1 = sit_threshold(p)
    grid = Grid.from_spacing(cfg.length, cfg.dx)
    initial = established_front(p, grid, cfg.front_age, cfl_factor=cfg.cfl_factor)
    jobs = []
    for m in mts:
        if not 0 <= m < MT1:
            raise ModelError(f"sterile level {m} outside [0, MT1 = {MT1:.6g})")
        jobs.append((p, m, cfg, initial))
    results: list = [None] * len(jobs)
    notes = [""] * len(jobs)
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            futs = [ex.submit(_speed_point, j) for j in jobs]
            for i, f in enumerate(futs):
                try:
                    results[i] = f.result()
                except Exception as exc:  # keep the sweep going
                    notes[i] = f"failed: {exc}"
    else:
        for i, j in enumerate(jobs):
            try:
                results[i] = _speed_point(j)
            except Exception as exc:
                notes[i] = f"failed: {exc}"
                log.warning("speed point mt=%g failed: %s", mts[i], exc)
    rows = list(zip(mts, results, notes))
    ordered = sorted((m, e) for m, e, _ in rows if e is not None)
    bracket = None
    for (m0, e0), (m1, e1) in zip(ordered, ordered[1:]):
        if e0.speed > 0 and e1.speed < 0:
            bracket = (m0, m1)
            break
    return SpeedCurve(rows, bracket)


def critical_level_estimate(curve: SpeedCurve) -> Optional[float]:
    """Linear interpolation of the zero-speed level inside the bracket."""
    if curve.mt_critical is None:
        return None
    lookup = {m: e for m, e, _ in curve.rows if e is not None}
    m0, m1 = curve.mt_critical
    s0, s1 = lookup[m0].speed, lookup[m1].speed
    return m0 + (m1 - m0) * s0 / (s0 - s1)


def speed_window_default(t_end: float, transient: float = TRANSIENT_DAYS) -> tuple[float, float]:
    if t_end <= transient:
        raise TrackingError("horizon does not extend past the transient")
    return (transient, t_end)

