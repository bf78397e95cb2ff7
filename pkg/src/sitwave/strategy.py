"""Corridor release strategies and their outcomes.

The wild population enters from the right end of the domain and the zone
[0, x_min) is to be protected. Massive releases are made inside the corridor
[x_min, x_max] and small ones in the protected zone.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .equilibria import sit_threshold, wild_equilibrium
from .fronts import FrontRecord, SpeedEstimate, TrackingError, estimate_speed, track_fronts
from .params import ModelParams, State
from .pde import Profile, StepControl, Trajectory, pulse_profile, simulate
from .schedule import Grid, ReleaseSchedule

BLOCKED_SPEED = 0.005  # km/day


@dataclass
class Scenario:
    initial: Profile
    schedule: ReleaseSchedule
    t_end: float
    snapshot_every: float = 1.0
    cfl_factor: float = 0.9
    diffusing: bool = False
    invaded_side: str = "right"
    level: Optional[float] = None
    settle: float = 100.0
    final_window: float = 100.0
    census_threshold: float = 1.0


@dataclass
class StrategyOutcome:
    classification: str
    protected_zone_max_f: float
    protected_zone_max: State
    total_sterile_released: float
    corridor_track: list[tuple[float, float, float]]
    fronts: list[FrontRecord] = field(repr=False)
    final_speed: Optional[SpeedEstimate]
    contained: Optional[bool]
    trajectory: Optional[Trajectory] = field(default=None, repr=False)

    def front_at(self, t: float) -> Optional[float]:
        for r in self.fronts:
            if abs(r.t - t) < 1e-6:
                return r.x
        return None


def corridor_scenario(
    p: ModelParams,
    width: float = 20.0,
    k_massive: float = 1.1,
    start_day: float = 200.0,
    x_min: float = 60.0,
    dynamic: bool = False,
    t_end: float = 500.0,
    length: float = 150.0,
    dx: float = 0.1,
    pulse_width: float = 5.0,
    small_divisor: float = 100.0,
    **kw,
) -> Scenario:
    """Wild pulse at the right end, corridor releases from ``start_day`` on."""
    _, MT1 = sit_threshold(p)
    grid = Grid.from_spacing(length, dx)
    initial = pulse_profile(grid, wild_equilibrium(p), pulse_width, side="right")
    sched = ReleaseSchedule(
        mode="dynamic_corridor" if dynamic else "corridor",
        mt_massive=k_massive * MT1,
        mt_small=MT1 / small_divisor,
        x_min=x_min,
        x_max=x_min + width,
        start_day=start_day,
        **{k: kw.pop(k) for k in ("shift_step", "move_after", "trigger_every") if k in kw},
    )
    return Scenario(initial, sched, t_end, **kw)


def run_strategy(p: ModelParams, sc: Scenario, keep_trajectory: bool = False) -> StrategyOutcome:
    sched = sc.schedule
    if sched.mode in ("corridor", "dynamic_corridor") and sched.e1 is None and sched.mt_small > 0:
        sched = sched.with_trigger(p)
        sc = replace(sc, schedule=sched)
    ctl = StepControl.auto(p, sc.initial.grid, sc.cfl_factor, sc.diffusing)
    traj = simulate(p, sc.initial, ctl, sched, sc.t_end, sc.snapshot_every,
                    diffusing=sc.diffusing, census_threshold=sc.census_threshold)
    return assess_strategy(p, traj, sc, keep_trajectory)


def assess_strategy(p: ModelParams, traj: Trajectory, sc: Scenario,
                    keep_trajectory: bool = False) -> StrategyOutcome:
    """Classify a finished corridor run from its fronts and protected-zone census."""
    sched = sc.schedule
    if sched.e1 is None and sched.mode in ("corridor", "dynamic_corridor") and sched.mt_small > 0:
        sched = sched.with_trigger(p)
    grid = traj.snapshots[0].grid
    level = sc.level if sc.level is not None else 0.5 * wild_equilibrium(p).F
    fronts = track_fronts(traj, level, invaded_side=sc.invaded_side)
    direction = -1 if sc.invaded_side == "right" else 1

    x = grid.x
    x_protect = sched.x_min
    zone = x < x_protect - 1e-9
    after = traj.times >= sched.start_day - 1e-9
    settled = traj.times >= sched.start_day + sc.settle - 1e-9
    pz_f = 0.0
    pz_max = [0.0, 0.0, 0.0]
    for t_ok, s_ok, prof in zip(after, settled, traj.snapshots):
        if not zone.any():
            break
        if t_ok:
            pz_f = max(pz_f, float(prof.F[zone].max()))
        if s_ok:
            pz_max = [max(pz_max[0], float(prof.A[zone].max())),
                      max(pz_max[1], float(prof.M[zone].max())),
                      max(pz_max[2], float(prof.F[zone].max()))]
    pz_state = State(*pz_max)
    contained = None
    if sched.e1 is not None and zone.any():
        contained = pz_state.lt(sched.e1)

    final = traj.final
    t_last = float(traj.times[-1])
    speed = None
    try:
        speed = estimate_speed(fronts, (t_last - sc.final_window, t_last), direction,
                               domain=(0.0, grid.length))
    except TrackingError:
        pass

    if final.census() < sc.census_threshold:
        cls = "eliminated"
    elif _entered(fronts, sched, x_protect, sc.invaded_side) or (
        front_missing(final, level) and final.F.max() >= level
    ):
        cls = "invaded"
    elif speed is None:
        cls = "pushed_back" if not fronts or fronts[-1].t < t_last else "blocked"
    elif speed.speed <= -BLOCKED_SPEED:
        cls = "pushed_back"
    elif speed.speed < BLOCKED_SPEED:
        cls = "blocked"
    else:
        cls = "invaded"

    return StrategyOutcome(
        classification=cls,
        protected_zone_max_f=pz_f,
        protected_zone_max=pz_state,
        total_sterile_released=traj.summary["total_sterile_released"],
        corridor_track=traj.corridor_track,
        fronts=fronts,
        final_speed=speed,
        contained=contained,
        trajectory=traj if keep_trajectory else None,
    )


def front_missing(prof: Profile, level: float) -> bool:
    F = prof.F
    return bool(np.all(F >= level) or np.all(F < level))


def _entered(fronts, sched: ReleaseSchedule, x_protect: float, side: str) -> bool:
    for r in fronts:
        if r.t < sched.start_day:
            continue
        if side == "right" and r.x < x_protect:
            return True
        if side == "left" and r.x > x_protect:
            return True
    return False


def analytic_release_total(p: ModelParams, sched: ReleaseSchedule, grid: Grid,
                           t_from: float, t_to: float) -> float:
    """Sterile release (rate * area * duration) of a static corridor over [t_from, t_to]."""
    x = grid.x
    w = grid.weights()
    on = max(0.0, t_to - max(t_from, sched.start_day))
    massive = (x >= sched.x_min - 1e-9) & (x <= sched.x_max + 1e-9)
    small = x < sched.x_min - 1e-9
    area_rate = sched.mt_massive * float(w[massive].sum()) + sched.mt_small * float(w[small].sum())
    return p.mu_t * area_rate * on
