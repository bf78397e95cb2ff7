"""Spatio-temporal sterile-male release policies."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .params import ModelError, ModelParams, State

MODES = ("none", "uniform", "corridor", "dynamic_corridor", "explicit")

# node coordinates are compared to corridor bounds with this slack (km)
_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D grid of ``cell_count`` nodes on [0, length] km."""

    length: float = 150.0
    cell_count: int = 1501

    def __post_init__(self):
        if self.cell_count < 3:
            raise ModelError("grid needs at least 3 nodes")
        if not self.length > 0:
            raise ModelError("grid length must be > 0")

    @classmethod
    def from_spacing(cls, length: float, dx: float) -> "Grid":
        return cls(length, int(round(length / dx)) + 1)

    @property
    def dx(self) -> float:
        return self.length / (self.cell_count - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.cell_count)

    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights."""
        w = np.full(self.cell_count, self.dx)
        w[0] = w[-1] = self.dx / 2
        return w

    def index(self, x: float) -> int:
        return int(min(max(round(x / self.dx), 0), self.cell_count - 1))


@dataclass(frozen=True)
class ReleaseSchedule:
    """Sterile release policy.

    Levels are sterile-male counts (the held ``MT`` of the 3-equation model);
    the matching release rate is level * mu_T. ``explicit`` wraps a callable
    ``f(t, x) -> levels``.
    """

    mode: str = "none"
    mt: float = 0.0
    mt_massive: float = 0.0
    mt_small: float = 0.0
    x_min: float = 0.0
    x_max: float = 0.0
    start_day: float = 0.0
    shift_step: float = 1.0
    move_after: float = 100.0
    trigger_every: Optional[float] = None
    e1: Optional[State] = None
    explicit: Optional[Callable] = None
    at_edge: bool = False

    def problems(self, grid: Grid | None = None) -> list[str]:
        out = []
        if self.mode not in MODES:
            out.append(f"mode must be one of {MODES}")
        if self.start_day < 0:
            out.append("start_day must be >= 0")
        if self.mode == "uniform" and self.mt < 0:
            out.append("mt must be >= 0")
        if self.mode in ("corridor", "dynamic_corridor"):
            if not 0 <= self.x_min < self.x_max:
                out.append("corridor needs 0 <= x_min < x_max")
            if grid is not None and self.x_max > grid.length + _EDGE_EPS:
                out.append("corridor x_max exceeds the domain length")
            if not 0 <= self.mt_small < self.mt_massive:
                out.append("corridor needs 0 <= mt_small < mt_massive")
        if self.mode == "dynamic_corridor":
            if self.shift_step <= 0:
                out.append("shift_step must be > 0")
            if self.move_after < 0:
                out.append("move_after must be >= 0")
        if self.mode == "explicit" and self.explicit is None:
            out.append("explicit mode needs a release function")
        return out

    def validate(self, grid: Grid | None = None) -> "ReleaseSchedule":
        probs = self.problems(grid)
        if probs:
            raise ModelError("; ".join(probs))
        return self

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    def with_trigger(self, p: ModelParams) -> "ReleaseSchedule":
        """Attach E1 at the small release level as the corridor trigger."""
        from .equilibria import unstable_equilibrium

        return replace(self, e1=unstable_equilibrium(p, self.mt_small))


def release_field(schedule: ReleaseSchedule, t: float, grid: Grid) -> np.ndarray:
    """Per-node sterile level at time ``t`` (zero before the start day)."""
    x = grid.x
    if schedule.mode == "none" or t < schedule.start_day - 1e-12:
        return np.zeros_like(x)
    if schedule.mode == "uniform":
        return np.full_like(x, schedule.mt)
    if schedule.mode == "explicit":
        vals = np.asarray(schedule.explicit(t, x), dtype=float)
        if vals.shape != x.shape or np.any(vals < 0):
            raise ModelError("explicit release must be a non-negative per-node field")
        return vals
    inside = (x >= schedule.x_min - _EDGE_EPS) & (x <= schedule.x_max + _EDGE_EPS)
    behind = x < schedule.x_min - _EDGE_EPS
    return np.where(inside, schedule.mt_massive, np.where(behind, schedule.mt_small, 0.0))


def release_rate_field(schedule: ReleaseSchedule, t: float, grid: Grid, p: ModelParams) -> np.ndarray:
    """Release rate Lambda = level * mu_T used when sterile males diffuse."""
    return release_field(schedule, t, grid) * p.mu_t


def advance_corridor(schedule: ReleaseSchedule, prof, e1: State | None = None,
                     t: float | None = None) -> ReleaseSchedule:
    """Shift a dynamic corridor once the state at its left end is below E1.

    The move is blocked until ``move_after`` days past the start day. A
    corridor touching the right edge of the domain stays put and gets
    ``at_edge`` set.
    """
    if schedule.mode != "dynamic_corridor":
        raise ModelError("advance_corridor needs a dynamic_corridor schedule")
    ref = e1 if e1 is not None else schedule.e1
    if ref is None:
        raise ModelError("dynamic corridor needs the E1 trigger reference")
    if t is not None and t < schedule.start_day + schedule.move_after - 1e-12:
        return schedule
    grid = prof.grid
    i = grid.index(schedule.x_min)
    if not (prof.A[i] < ref.A and prof.M[i] < ref.M and prof.F[i] < ref.F):
        return schedule
    room = grid.length - schedule.x_max
    if room <= _EDGE_EPS:
        return replace(schedule, at_edge=True)
    shift = min(schedule.shift_step, room)
    return replace(
        schedule,
        x_min=schedule.x_min + shift,
        x_max=schedule.x_max + shift,
        at_edge=shift < schedule.shift_step,
    )
