"""Positivity-preserving 1-D time stepping of the SIT reaction-diffusion system.

Space uses the 3-point Laplacian with mirror (zero-flux) boundaries. Time
uses a nonstandard first-order update in which every loss term is taken
implicitly and every gain term explicitly, so each new value is a ratio of
non-negative quantities as long as ``dt <= dx^2 / (2 d)`` for every
diffusing field.

Two sterile-male treatments are available: the *held* mode keeps MT equal to
the schedule's level at each node (3 equations), the *diffusing* mode
integrates MT with diffusion d_T, release rate level * mu_T and death mu_T
(4 equations).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .equilibria import basic_offspring_number, wild_equilibrium
from .kinetics import mating_ratio
from .params import ModelError, ModelParams, State
from .schedule import Grid, ReleaseSchedule, advance_corridor, release_field

log = logging.getLogger(__name__)


class CFLError(ModelError):
    """Time step too large for the explicit diffusion part."""


@dataclass
class Profile:
    grid: Grid
    A: np.ndarray
    M: np.ndarray
    F: np.ndarray
    MT: np.ndarray | None = None

    def __post_init__(self):
        n = self.grid.cell_count
        for name in ("A", "M", "F", "MT"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=float)
            if v.shape != (n,):
                raise ModelError(f"field {name} has shape {v.shape}, grid has {n} nodes")
            setattr(self, name, v)

    def copy(self) -> "Profile":
        return Profile(self.grid, self.A.copy(), self.M.copy(), self.F.copy(),
                       None if self.MT is None else self.MT.copy())

    def census(self) -> float:
        """Total wild individuals, trapezoid rule over the domain."""
        w = self.grid.weights()
        return float(w @ (self.A + self.M + self.F))

    def min(self) -> float:
        vals = [self.A.min(), self.M.min(), self.F.min()]
        if self.MT is not None:
            vals.append(self.MT.min())
        return float(min(vals))

    def at(self, i: int) -> State:
        return State(float(self.A[i]), float(self.M[i]), float(self.F[i]))

    def within(self, upper: State, rtol: float = 1e-12) -> bool:
        return bool(
            np.all(self.A <= upper.A * (1 + rtol))
            and np.all(self.M <= upper.M * (1 + rtol))
            and np.all(self.F <= upper.F * (1 + rtol))
        )

    def le(self, other: "Profile") -> bool:
        return bool(np.all(self.A <= other.A) and np.all(self.M <= other.M)
                    and np.all(self.F <= other.F))


@dataclass(frozen=True)
class StepControl:
    dt: float
    cfl_factor: float = 0.9

    @classmethod
    def auto(cls, p: ModelParams, grid: Grid, cfl_factor: float = 0.9,
             diffusing: bool = False) -> "StepControl":
        return cls(cfl_factor * cfl_limit(p, grid, diffusing), cfl_factor)

    def check(self, p: ModelParams, grid: Grid, diffusing: bool = False) -> None:
        if not 0 < self.cfl_factor <= 1:
            raise CFLError("cfl_factor must lie in (0, 1]")
        bound = self.cfl_factor * cfl_limit(p, grid, diffusing)
        if not 0 < self.dt <= bound * (1 + 1e-12):
            raise CFLError(f"dt = {self.dt:g} exceeds the positivity bound {bound:.6g} days")


def cfl_limit(p: ModelParams, grid: Grid, diffusing: bool = False) -> float:
    d = max(p.d_f, p.d_m, p.d_t if diffusing else 0.0)
    return grid.dx**2 / (2 * d)


def monotone_limit(p: ModelParams, f_max: float) -> float:
    """Largest dt keeping the A update non-decreasing in A for F <= f_max.

    The update (A + dt phi F) / (1 + dt (gamma + mu_A1 + mu_A2 A)) grows with
    A only while dt^2 phi mu_A2 F <= 1 + dt (gamma + mu_A1). Without it the
    comparison principle and the invariant rectangle can fail.
    """
    a = p.phi * p.mu_a2 * f_max
    if a <= 0:
        return math.inf
    g = p.gamma + p.mu_a1
    return (g + math.sqrt(g * g + 4 * a)) / (2 * a)


def female_bound(p: ModelParams, prof: Profile) -> float:
    """Upper bound on F over all later times, from an invariant box."""
    if basic_offspring_number(p) > 1:
        return wild_equilibrium(p).F * rectangle_factor(p, prof)
    # R <= 1: F0 = max(F, r gamma A / mu_F), A0 = max(A, phi F0 / (gamma + mu_A1)) is invariant
    return max(float(prof.F.max()), p.r * p.gamma * float(prof.A.max()) / p.mu_f)


def laplacian(u: np.ndarray, dx: float) -> np.ndarray:
    out = np.empty_like(u)
    out[1:-1] = u[:-2] - 2 * u[1:-1] + u[2:]
    out[0] = 2 * (u[1] - u[0])
    out[-1] = 2 * (u[-2] - u[-1])
    return out / (dx * dx)


def _advance(p: ModelParams, A, M, F, MT, dt, dx, lam=None, MT_state=None):
    """One nonstandard update on raw arrays; returns new (A, M, F, MT_state)."""
    ratio = mating_ratio(M, MT)
    A1 = (A + dt * p.phi * F) / (1 + dt * (p.gamma + p.mu_a1 + p.mu_a2 * A))
    M1 = (M + dt * p.d_m * laplacian(M, dx) + dt * (1 - p.r) * p.gamma * A) / (1 + dt * p.mu_m)
    F1 = (F + dt * p.d_f * laplacian(F, dx) + dt * p.r * p.gamma * A * ratio) / (1 + dt * p.mu_f)
    T1 = None
    if MT_state is not None:
        T1 = (MT_state + dt * p.d_t * laplacian(MT_state, dx) + dt * lam) / (1 + dt * p.mu_t)
    return A1, M1, F1, T1


def step(p: ModelParams, prof: Profile, ctl: StepControl, release, diffusing: bool = False,
         check: bool = True) -> Profile:
    """Advance ``prof`` by ``ctl.dt``.

    ``release`` is the per-node sterile level (held mode) or release rate
    Lambda (diffusing mode).
    """
    grid = prof.grid
    release = np.asarray(release, dtype=float)
    if release.shape != prof.A.shape:
        raise ModelError("release field does not match the grid")
    if check:
        ctl.check(p, grid, diffusing)
        if np.any(release < 0):
            raise ModelError("release must be non-negative")
        lim = monotone_limit(p, float(prof.F.max()))
        if ctl.dt > lim * (1 + 1e-12):
            raise CFLError(f"dt = {ctl.dt:g} exceeds the immature-stage monotonicity bound {lim:.6g} days")
    if diffusing:
        mt_now = prof.MT if prof.MT is not None else np.zeros_like(prof.A)
        A, M, F, T = _advance(p, prof.A, prof.M, prof.F, mt_now, ctl.dt, grid.dx, release, mt_now)
        return Profile(grid, A, M, F, T)
    A, M, F, _ = _advance(p, prof.A, prof.M, prof.F, release, ctl.dt, grid.dx)
    return Profile(grid, A, M, F, release.copy())


# ---------------------------------------------------------------- initial data

def zero_profile(grid: Grid) -> Profile:
    z = np.zeros(grid.cell_count)
    return Profile(grid, z, z.copy(), z.copy(), z.copy())


def uniform_profile(grid: Grid, s: State) -> Profile:
    n = grid.cell_count
    return Profile(grid, np.full(n, s.A), np.full(n, s.M), np.full(n, s.F), np.zeros(n))


def pulse_profile(grid: Grid, level: State, width: float, side: str = "left") -> Profile:
    """Step pulse of height ``level`` on the first (or last) ``width`` km."""
    x = grid.x
    if side == "left":
        sup = x < width - 1e-9
    elif side == "right":
        sup = x > grid.length - width + 1e-9
    else:
        raise ModelError("side must be 'left' or 'right'")
    n = grid.cell_count
    return Profile(grid, np.where(sup, level.A, 0.0), np.where(sup, level.M, 0.0),
                   np.where(sup, level.F, 0.0), np.zeros(n))


def bump_profile(grid: Grid, level: State, center: float, width: float) -> Profile:
    """Smooth cos^2 bump of half-width ``width`` km."""
    z = np.clip((grid.x - center) / width, -1.0, 1.0)
    shape = np.cos(0.5 * math.pi * z) ** 2
    return Profile(grid, level.A * shape, level.M * shape, level.F * shape,
                   np.zeros(grid.cell_count))


# ---------------------------------------------------------------- simulation

@dataclass
class Trajectory:
    times: np.ndarray
    snapshots: list[Profile]
    summary: dict = field(default_factory=dict)
    corridor_track: list[tuple[float, float, float]] = field(default_factory=list)
    schedule: ReleaseSchedule | None = None

    @property
    def final(self) -> Profile:
        return self.snapshots[-1]

    def at_time(self, t: float) -> Profile:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-6:
            raise KeyError(f"no snapshot at t = {t}")
        return self.snapshots[i]


def rectangle_factor(p: ModelParams, prof: Profile) -> float:
    """Smallest k2 >= 1 with the profile inside [0, k2 E*]."""
    star = wild_equilibrium(p)
    return max(1.0, float(prof.A.max() / star.A), float(prof.M.max() / star.M),
               float(prof.F.max() / star.F))


def _occupied(prof: Profile, level: float) -> int:
    return int(np.count_nonzero(prof.F >= level))


def simulate(
    p: ModelParams,
    initial: Profile,
    ctl: StepControl,
    schedule: ReleaseSchedule | None = None,
    t_end: float = 400.0,
    snapshot_every: float = 1.0,
    diffusing: bool = False,
    census_threshold: float = 1.0,
    t0: float = 0.0,
) -> Trajectory:
    """Integrate from ``initial`` at time ``t0`` to ``t0 + t_end``.

    The step is shrunk so an integer number of steps fits each snapshot
    interval. A dynamic corridor is re-evaluated every ``trigger_every`` days
    (default: each snapshot).
    """
    schedule = schedule or ReleaseSchedule()
    grid = initial.grid
    schedule.validate(grid)
    if not t_end > 0 or not snapshot_every > 0:
        raise ModelError("t_end and snapshot_every must be > 0")
    if t_end < snapshot_every - 1e-12:
        raise ModelError("t_end must be >= snapshot_every")
    ctl.check(p, grid, diffusing)
    if initial.min() < 0:
        raise ModelError("initial data must be non-negative")
    if schedule.mode == "dynamic_corridor" and schedule.e1 is None:
        schedule = schedule.with_trigger(p)

    dt_max = min(ctl.dt, monotone_limit(p, female_bound(p, initial)))
    if dt_max < ctl.dt:
        log.info("step reduced from %g to %g days for immature-stage monotonicity", ctl.dt, dt_max)
    n_sub = max(1, math.ceil(snapshot_every / dt_max - 1e-9))
    dt = snapshot_every / n_sub
    n_snap = int(round(t_end / snapshot_every))
    trigger_every = schedule.trigger_every or snapshot_every
    trigger_stride = max(1, int(round(trigger_every / snapshot_every)))

    growth = basic_offspring_number(p) > 1
    k2 = rectangle_factor(p, initial) if growth else None
    upper = wild_equilibrium(p).scaled(k2) if growth else None

    dx = grid.dx
    w = grid.weights()
    A, M, F = initial.A.copy(), initial.M.copy(), initial.F.copy()
    T = None
    if diffusing:
        T = initial.MT.copy() if initial.MT is not None else np.zeros_like(A)

    key = None
    field_cache = None
    released = 0.0
    escape = False
    lo = {"A": A.min(), "M": M.min(), "F": F.min()}
    hi = {"A": A.max(), "M": M.max(), "F": F.max()}

    def level_field(t):
        nonlocal key, field_cache
        active = not (schedule.mode == "none" or t < schedule.start_day - 1e-12)
        k = (active, schedule.x_min, schedule.x_max) if schedule.mode != "explicit" else None
        if k is None or k != key:
            field_cache = release_field(schedule, t, grid)
            key = k
        return field_cache

    first_mt = level_field(t0) if not diffusing else T
    snaps = [Profile(grid, A.copy(), M.copy(), F.copy(), first_mt.copy())]
    times = [t0]
    track = []
    if schedule.mode in ("corridor", "dynamic_corridor"):
        track.append((t0, schedule.x_min, schedule.x_max))

    for j in range(1, n_snap + 1):
        base = t0 + (j - 1) * snapshot_every
        for k in range(n_sub):
            t = base + k * dt
            lvl = level_field(t)
            if diffusing:
                lam = lvl * p.mu_t
                released += dt * float(w @ lam)
                A, M, F, T = _advance(p, A, M, F, T, dt, dx, lam, T)
            else:
                released += dt * p.mu_t * float(w @ lvl)
                A, M, F, _ = _advance(p, A, M, F, lvl, dt, dx)
        t = t0 + j * snapshot_every
        mt_field = T.copy() if diffusing else level_field(t).copy()
        prof = Profile(grid, A.copy(), M.copy(), F.copy(), mt_field)
        for name, v in (("A", A), ("M", M), ("F", F)):
            lo[name] = min(lo[name], float(v.min()))
            hi[name] = max(hi[name], float(v.max()))
        if upper is not None and not prof.within(upper, 1e-9):
            if not escape:
                log.warning("profile left the invariant rectangle at t = %g", t)
            escape = True
        if schedule.mode == "dynamic_corridor" and j % trigger_stride == 0:
            schedule = advance_corridor(schedule, prof, t=t)
        if schedule.mode in ("corridor", "dynamic_corridor"):
            track.append((t, schedule.x_min, schedule.x_max))
        snaps.append(prof)
        times.append(t)

    final = snaps[-1]
    census = final.census()
    level = 0.5 * max(float(initial.F.max()), float(final.F.max()))
    if census < census_threshold:
        regime = "eliminated"
    elif level > 0 and _occupied(final, level) > _occupied(initial, level) + 1:
        regime = "invaded"
    else:
        regime = "blocked"
    summary = {
        "t_end": t0 + n_snap * snapshot_every,
        "dt": dt,
        "steps": n_sub * n_snap,
        "min": lo,
        "max": hi,
        "total_sterile_released": released,
        "final_census": census,
        "regime": regime,
        "rectangle_k2": k2,
        "rectangle_escape": escape,
        "negative_values": min(lo.values()) < 0,
    }
    return Trajectory(np.array(times), snaps, summary, track, schedule)


def established_front(p: ModelParams, grid: Grid, age: float = 170.0, side: str = "left",
                      width: float = 5.0, cfl_factor: float = 0.9) -> Profile:
    """Sterile-free invasion grown from a wild pulse for ``age`` days."""
    init = pulse_profile(grid, wild_equilibrium(p), width, side)
    ctl = StepControl.auto(p, grid, cfl_factor)
    traj = simulate(p, init, ctl, None, t_end=age, snapshot_every=age)
    out = traj.final.copy()
    out.MT = np.zeros(grid.cell_count)
    return out


# ---------------------------------------------------------------- ODE oracle

def homogeneous_ode_oracle(p: ModelParams, s0: State, mt: float, t_end: float,
                           dt: float = 0.1, record_every: float | None = None):
    """Spatially homogeneous system under the same nonstandard update.

    Returns ``(times, states)`` with ``states`` of shape (n, 3).
    """
    if mt < 0:
        raise ModelError("sterile level must be >= 0")
    n = max(1, int(round(t_end / dt)))
    stride = max(1, int(round((record_every or dt) / dt)))
    A, M, F = (float(c) for c in s0)
    g1 = p.gamma + p.mu_a1
    rg = p.r * p.gamma
    mg = (1 - p.r) * p.gamma
    dm = 1 + dt * p.mu_m
    df = 1 + dt * p.mu_f
    times, out = [0.0], [(A, M, F)]
    for i in range(1, n + 1):
        den = M + mt
        ratio = M / den if den > 0 else 0.0
        A, M, F = (
            (A + dt * p.phi * F) / (1 + dt * (g1 + p.mu_a2 * A)),
            (M + dt * mg * A) / dm,
            (F + dt * rg * A * ratio) / df,
        )
        if i % stride == 0 or i == n:
            times.append(i * dt)
            out.append((A, M, F))
    return np.array(times), np.array(out)
