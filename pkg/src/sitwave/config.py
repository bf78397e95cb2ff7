"""Flat ``section.key = value`` run configuration.

Numbers may be written as arithmetic on the literal ``MT1`` (the SIT
threshold for the configured parameters), e.g. ``1.1*MT1`` or ``MT1/100``.
Everything is resolved to plain floats at parse time, so serializing a
config writes numbers only.
"""

from __future__ import annotations

import ast
import csv
import math
import operator
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .equilibria import basic_offspring_number, sit_threshold
from .params import ModelError, ModelParams
from .pde import CFLError, StepControl, cfl_limit
from .schedule import MODES, Grid, ReleaseSchedule


class ConfigError(ModelError):
    """Bad configuration text; the message names the offending key."""


INITIAL_KINDS = ("zero", "uniform", "pulse", "bump", "front", "snapshot")
SIDES = ("left", "right")
STERILE_MODELS = ("held", "diffusing")


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "pulse"
    side: str = "left"
    width: float = 5.0
    height: float = 1.0  # fraction of the wild equilibrium
    center: Optional[float] = None
    age: float = 170.0
    path: Optional[str] = None


@dataclass(frozen=True)
class TrackingSpec:
    field: str = "F"
    level: Optional[float] = None  # None: half the invading plateau
    side: Optional[str] = None  # None: the initial side
    transient: float = 125.0
    window_start: Optional[float] = None  # None: the transient
    window_end: Optional[float] = None  # None: end of run
    span: float = 50.0  # trailing window for the per-row speed column


@dataclass(frozen=True)
class StrategySpec:
    settle: float = 100.0
    final_window: float = 100.0


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    plots: bool = False
    write_every: Optional[float] = None  # None: every snapshot


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    grid: Grid = field(default_factory=Grid)
    dt: Optional[float] = None  # None: cfl_factor times the positivity bound
    cfl_factor: float = 0.9
    sterile: str = "held"
    initial: InitialSpec = field(default_factory=InitialSpec)
    schedule: ReleaseSchedule = field(default_factory=ReleaseSchedule)
    schedule_path: Optional[str] = None
    t_end: float = 400.0
    snapshot_every: float = 1.0
    census_threshold: float = 1.0
    tracking: TrackingSpec = field(default_factory=TrackingSpec)
    strategy: StrategySpec = field(default_factory=StrategySpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    @property
    def diffusing(self) -> bool:
        return self.sterile == "diffusing"

    def step_control(self) -> StepControl:
        if self.dt is None:
            return StepControl.auto(self.params, self.grid, self.cfl_factor, self.diffusing)
        return StepControl(self.dt, self.cfl_factor)

    def invaded_side(self) -> str:
        if self.tracking.side is not None:
            return self.tracking.side
        return self.initial.side

    def release_schedule(self) -> ReleaseSchedule:
        """Schedule ready for the engine; explicit tables are loaded here."""
        if self.schedule.mode != "explicit":
            return self.schedule
        table = load_release_table(self.schedule_path)
        return replace(self.schedule, explicit=table)

    def mt_reference(self) -> float:
        """Homogeneous sterile level used by the analysis commands."""
        s = self.schedule
        if s.mode == "uniform":
            return s.mt
        if s.mode in ("corridor", "dynamic_corridor"):
            return s.mt_small
        return 0.0


# ---------------------------------------------------------------- keys

PARAM_KEYS = tuple(f"params.{n}" for n in ModelParams.names())

# key -> type tag
KEYS: dict[str, str] = {k: "float" for k in PARAM_KEYS}
KEYS.update({
    "grid.length": "float",
    "grid.cell_count": "int",
    "grid.dx": "float",
    "control.dt": "float|auto",
    "control.cfl_factor": "float",
    "model.sterile": "choice",
    "initial.kind": "choice",
    "initial.side": "choice",
    "initial.width": "float",
    "initial.height": "float",
    "initial.center": "float",
    "initial.age": "float",
    "initial.path": "str",
    "schedule.mode": "choice",
    "schedule.mt": "float",
    "schedule.mt_massive": "float",
    "schedule.mt_small": "float",
    "schedule.x_min": "float",
    "schedule.x_max": "float",
    "schedule.width": "float",
    "schedule.start_day": "float",
    "schedule.shift_step": "float",
    "schedule.move_after": "float",
    "schedule.trigger_every": "float|auto",
    "schedule.path": "str",
    "run.t_end": "float",
    "run.snapshot_every": "float",
    "run.census_threshold": "float",
    "tracking.field": "choice",
    "tracking.level": "float|auto",
    "tracking.side": "choice|auto",
    "tracking.transient": "float",
    "tracking.window_start": "float|auto",
    "tracking.window_end": "float|auto",
    "tracking.span": "float",
    "strategy.settle": "float",
    "strategy.final_window": "float",
    "output.dir": "str",
    "output.plots": "bool",
    "output.write_every": "float|auto",
})

CHOICES = {
    "model.sterile": STERILE_MODELS,
    "initial.kind": INITIAL_KINDS,
    "initial.side": SIDES,
    "schedule.mode": MODES,
    "tracking.field": ("A", "M", "F"),
    "tracking.side": SIDES,
}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub,
           ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval_number(key: str, text: str, mt1: Optional[float]) -> float:
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "MT1":
            if mt1 is None:
                raise ConfigError(f"{key}: MT1 is undefined because the offspring number is <= 1")
            return mt1
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ConfigError(f"{key}: expected a number, got {text!r}")

    try:
        v = ev(tree)
    except ZeroDivisionError:
        raise ConfigError(f"{key}: division by zero in {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: value must be finite")
    return v


def _parse_lines(text: str) -> dict[str, tuple[str, int]]:
    raw: dict[str, tuple[str, int]] = {}
    for n, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {n}: expected 'key = value', got {line.strip()!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {n}: duplicate key {key!r} (first on line {raw[key][1]})")
        if value == "":
            raise ConfigError(f"{key}: empty value")
        raw[key] = (value, n)
    return raw


class _Reader:
    def __init__(self, raw, mt1=None):
        self.raw = raw
        self.mt1 = mt1

    def has(self, key):
        return key in self.raw

    def get(self, key, default=None):
        if key not in self.raw:
            return default
        text = self.raw[key][0]
        tag = KEYS[key]
        if tag.endswith("|auto") and text.lower() == "auto":
            return None
        base = tag.split("|")[0]
        if base == "float":
            return _eval_number(key, text, self.mt1)
        if base == "int":
            try:
                return int(text)
            except ValueError:
                raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
        if base == "bool":
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ConfigError(f"{key}: expected true or false, got {text!r}")
        if base == "choice":
            if text not in CHOICES[key]:
                raise ConfigError(f"{key}: must be one of {', '.join(CHOICES[key])}, got {text!r}")
            return text
        return text

    def require(self, key, why):
        if key not in self.raw:
            raise ConfigError(f"missing required key {key} ({why})")
        return self.get(key)


def parse_config(text: str, base_dir: Optional[Path] = None) -> RunConfig:
    """Parse and fully validate configuration text.

    Relative ``initial.path`` and ``schedule.path`` entries are resolved
    against ``base_dir`` when it is given.
    """
    raw = _parse_lines(text)
    rd = _Reader(raw)

    p = ModelParams(**{k.split(".", 1)[1]: rd.get(k) for k in PARAM_KEYS if rd.has(k)})
    for msg in p.problems():
        raise ConfigError(f"params.{msg}")
    rd.mt1 = sit_threshold(p)[1] if basic_offspring_number(p) > 1 else None

    length = rd.get("grid.length", 150.0)
    if rd.has("grid.dx") and rd.has("grid.cell_count"):
        raise ConfigError("grid.dx and grid.cell_count are mutually exclusive")
    if rd.has("grid.dx"):
        dx = rd.get("grid.dx")
        if not dx > 0:
            raise ConfigError("grid.dx must be > 0")
        cells = int(round(length / dx)) + 1
    else:
        cells = rd.get("grid.cell_count", 1501)
    try:
        grid = Grid(length, cells)
    except ModelError as exc:
        raise ConfigError(f"grid.length/grid.cell_count: {exc}") from None

    sterile = rd.get("model.sterile", "held")
    cfl = rd.get("control.cfl_factor", 0.9)
    if not 0 < cfl <= 1:
        raise ConfigError("control.cfl_factor must lie in (0, 1]")
    dt = rd.get("control.dt")
    if dt is not None:
        try:
            StepControl(dt, cfl).check(p, grid, sterile == "diffusing")
        except CFLError:
            bound = cfl * cfl_limit(p, grid, sterile == "diffusing")
            raise ConfigError(
                f"control.dt = {dt:g} exceeds the positivity bound {bound:.6g} days "
                f"(cfl_factor * dx^2 / (2 max diffusion), dx = {grid.dx:g})"
            ) from None

    def resolve(path):
        if path is None or base_dir is None or Path(path).is_absolute():
            return path
        return str(Path(base_dir) / path)

    kind = rd.get("initial.kind", "pulse")
    init = InitialSpec(
        kind=kind,
        side=rd.get("initial.side", "left"),
        width=rd.get("initial.width", 5.0),
        height=rd.get("initial.height", 1.0),
        center=rd.require("initial.center", "initial.kind = bump") if kind == "bump"
        else rd.get("initial.center"),
        age=rd.get("initial.age", 170.0),
        path=resolve(rd.require("initial.path", "initial.kind = snapshot")) if kind == "snapshot"
        else resolve(rd.get("initial.path")),
    )
    if init.width <= 0 or init.width > grid.length:
        raise ConfigError("initial.width must lie in (0, grid.length]")
    if init.height < 0:
        raise ConfigError("initial.height must be >= 0")
    if init.age <= 0:
        raise ConfigError("initial.age must be > 0")

    sched, sched_path = _schedule(rd, grid)
    sched_path = resolve(sched_path)

    t_end = rd.get("run.t_end", 400.0)
    every = rd.get("run.snapshot_every", 1.0)
    if not every > 0:
        raise ConfigError("run.snapshot_every must be > 0")
    if not t_end >= every:
        raise ConfigError("run.t_end must be >= run.snapshot_every")
    if abs(t_end / every - round(t_end / every)) > 1e-9:
        raise ConfigError("run.t_end must be a whole multiple of run.snapshot_every")
    census = rd.get("run.census_threshold", 1.0)
    if census < 0:
        raise ConfigError("run.census_threshold must be >= 0")

    tracking = TrackingSpec(
        field=rd.get("tracking.field", "F"),
        level=rd.get("tracking.level"),
        side=rd.get("tracking.side"),
        transient=rd.get("tracking.transient", 125.0),
        window_start=rd.get("tracking.window_start"),
        window_end=rd.get("tracking.window_end"),
        span=rd.get("tracking.span", 50.0),
    )
    if tracking.level is not None and not tracking.level > 0:
        raise ConfigError("tracking.level must be > 0")
    if tracking.transient < 0:
        raise ConfigError("tracking.transient must be >= 0")
    if tracking.span <= 0:
        raise ConfigError("tracking.span must be > 0")
    start = tracking.window_start if tracking.window_start is not None else tracking.transient
    if tracking.window_start is not None and tracking.window_start < tracking.transient:
        raise ConfigError("tracking.window_start must not precede tracking.transient")
    if tracking.window_end is not None and tracking.window_end <= start:
        raise ConfigError("tracking.window_end must exceed the window start")

    strategy = StrategySpec(rd.get("strategy.settle", 100.0), rd.get("strategy.final_window", 100.0))
    if strategy.settle < 0 or strategy.final_window <= 0:
        raise ConfigError("strategy.settle must be >= 0 and strategy.final_window > 0")

    output = OutputSpec(
        dir=rd.get("output.dir", "out"),
        plots=rd.get("output.plots", False),
        write_every=rd.get("output.write_every"),
    )
    if output.write_every is not None:
        k = output.write_every / every
        if output.write_every <= 0 or abs(k - round(k)) > 1e-9:
            raise ConfigError("output.write_every must be a positive multiple of run.snapshot_every")

    return RunConfig(p, grid, dt, cfl, sterile, init, sched, sched_path, t_end, every, census,
                     tracking, strategy, output)


def _schedule(rd: _Reader, grid: Grid) -> tuple[ReleaseSchedule, Optional[str]]:
    mode = rd.get("schedule.mode", "none")
    kw: dict = {"mode": mode}
    path = None
    if mode == "uniform":
        kw["mt"] = rd.require("schedule.mt", "schedule.mode = uniform")
        if kw["mt"] < 0:
            raise ConfigError("schedule.mt must be >= 0")
    elif mode in ("corridor", "dynamic_corridor"):
        why = f"schedule.mode = {mode}"
        kw["mt_massive"] = rd.require("schedule.mt_massive", why)
        kw["mt_small"] = rd.require("schedule.mt_small", why)
        kw["x_min"] = rd.require("schedule.x_min", why)
        if rd.has("schedule.x_max") and rd.has("schedule.width"):
            raise ConfigError("schedule.x_max and schedule.width are mutually exclusive")
        if rd.has("schedule.width"):
            kw["x_max"] = kw["x_min"] + rd.get("schedule.width")
        else:
            kw["x_max"] = rd.require("schedule.x_max", why + " (or give schedule.width)")
        if not 0 <= kw["x_min"] < kw["x_max"]:
            raise ConfigError("schedule.x_min/x_max: need 0 <= x_min < x_max")
        if kw["x_max"] > grid.length + 1e-9:
            raise ConfigError("schedule.x_max must not exceed grid.length")
        if not 0 <= kw["mt_small"] < kw["mt_massive"]:
            raise ConfigError("schedule.mt_small/mt_massive: need 0 <= mt_small < mt_massive")
        if mode == "dynamic_corridor" and not kw["mt_small"] > 0:
            raise ConfigError("schedule.mt_small must be > 0 for a dynamic corridor (it sets the E1 trigger)")
    elif mode == "explicit":
        path = rd.require("schedule.path", "schedule.mode = explicit")
    kw["start_day"] = rd.get("schedule.start_day", 0.0)
    if kw["start_day"] < 0:
        raise ConfigError("schedule.start_day must be >= 0")
    if mode == "dynamic_corridor":
        kw["shift_step"] = rd.get("schedule.shift_step", 1.0)
        kw["move_after"] = rd.get("schedule.move_after", 100.0)
        kw["trigger_every"] = rd.get("schedule.trigger_every")
        if kw["shift_step"] <= 0:
            raise ConfigError("schedule.shift_step must be > 0")
        if kw["move_after"] < 0:
            raise ConfigError("schedule.move_after must be >= 0")
        if kw["trigger_every"] is not None and kw["trigger_every"] <= 0:
            raise ConfigError("schedule.trigger_every must be > 0")
    unused = [k for k in ("schedule.mt", "schedule.mt_massive", "schedule.mt_small",
                          "schedule.x_min", "schedule.x_max", "schedule.width",
                          "schedule.shift_step", "schedule.move_after",
                          "schedule.trigger_every", "schedule.path")
              if rd.has(k) and not _used_by(k, mode)]
    if unused:
        raise ConfigError(f"{unused[0]}: not used by schedule.mode = {mode}")
    return ReleaseSchedule(**kw), path


def _used_by(key: str, mode: str) -> bool:
    name = key.split(".", 1)[1]
    if name == "mt":
        return mode == "uniform"
    if name in ("mt_massive", "mt_small", "x_min", "x_max", "width"):
        return mode in ("corridor", "dynamic_corridor")
    if name in ("shift_step", "move_after", "trigger_every"):
        return mode == "dynamic_corridor"
    if name == "path":
        return mode == "explicit"
    return True


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent)


# ---------------------------------------------------------------- writing

def _num(v: float) -> str:
    return repr(float(v))


def serialize_config(cfg: RunConfig) -> str:
    """Text that parses back to an equal RunConfig."""
    out = []
    for name, v in cfg.params.as_dict().items():
        out.append(f"params.{name} = {_num(v)}")
    out.append(f"grid.length = {_num(cfg.grid.length)}")
    out.append(f"grid.cell_count = {cfg.grid.cell_count}")
    out.append(f"control.dt = {'auto' if cfg.dt is None else _num(cfg.dt)}")
    out.append(f"control.cfl_factor = {_num(cfg.cfl_factor)}")
    out.append(f"model.sterile = {cfg.sterile}")
    ini = cfg.initial
    out += [f"initial.kind = {ini.kind}", f"initial.side = {ini.side}",
            f"initial.width = {_num(ini.width)}", f"initial.height = {_num(ini.height)}",
            f"initial.age = {_num(ini.age)}"]
    if ini.center is not None:
        out.append(f"initial.center = {_num(ini.center)}")
    if ini.path is not None:
        out.append(f"initial.path = {ini.path}")
    s = cfg.schedule
    out.append(f"schedule.mode = {s.mode}")
    if s.mode == "uniform":
        out.append(f"schedule.mt = {_num(s.mt)}")
    if s.mode in ("corridor", "dynamic_corridor"):
        out += [f"schedule.mt_massive = {_num(s.mt_massive)}",
                f"schedule.mt_small = {_num(s.mt_small)}",
                f"schedule.x_min = {_num(s.x_min)}", f"schedule.x_max = {_num(s.x_max)}"]
    if s.mode == "dynamic_corridor":
        out += [f"schedule.shift_step = {_num(s.shift_step)}",
                f"schedule.move_after = {_num(s.move_after)}",
                "schedule.trigger_every = "
                + ("auto" if s.trigger_every is None else _num(s.trigger_every))]
    if s.mode == "explicit":
        out.append(f"schedule.path = {cfg.schedule_path}")
    out.append(f"schedule.start_day = {_num(s.start_day)}")
    out += [f"run.t_end = {_num(cfg.t_end)}", f"run.snapshot_every = {_num(cfg.snapshot_every)}",
            f"run.census_threshold = {_num(cfg.census_threshold)}"]
    tr = cfg.tracking
    out += [f"tracking.field = {tr.field}",
            f"tracking.level = {'auto' if tr.level is None else _num(tr.level)}",
            f"tracking.side = {tr.side or 'auto'}",
            f"tracking.transient = {_num(tr.transient)}",
            f"tracking.window_start = {'auto' if tr.window_start is None else _num(tr.window_start)}",
            f"tracking.window_end = {'auto' if tr.window_end is None else _num(tr.window_end)}",
            f"tracking.span = {_num(tr.span)}"]
    out += [f"strategy.settle = {_num(cfg.strategy.settle)}",
            f"strategy.final_window = {_num(cfg.strategy.final_window)}"]
    o = cfg.output
    out += [f"output.dir = {o.dir}", f"output.plots = {'true' if o.plots else 'false'}",
            f"output.write_every = {'auto' if o.write_every is None else _num(o.write_every)}"]
    return "\n".join(out) + "\n"


def with_override(cfg: RunConfig, key: str, value: float) -> RunConfig:
    """Copy of ``cfg`` with one numeric key changed, revalidated."""
    text = serialize_config(cfg)
    lines = [ln for ln in text.splitlines() if ln.split("=", 1)[0].strip() != key]
    if key == "schedule.width":
        lines = [ln for ln in lines if ln.split("=", 1)[0].strip() != "schedule.x_max"]
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}")
    lines.append(f"{key} = {_num(value)}")
    return parse_config("\n".join(lines) + "\n")


# ---------------------------------------------------------------- release tables

@dataclass(frozen=True)
class ReleaseTable:
    """Sterile levels from a ``t_days,x_km,MT`` table.

    Piecewise constant in time (the latest row time not after ``t``) and
    linear in space between tabulated positions, constant beyond them.
    """

    times: tuple
    xs: tuple
    levels: tuple  # one tuple of levels per time

    def __call__(self, t, x):
        i = int(np.searchsorted(np.asarray(self.times), t + 1e-12, side="right")) - 1
        if i < 0:
            return np.zeros_like(x)
        return np.interp(x, self.xs, self.levels[i])


def load_release_table(path) -> ReleaseTable:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            if header != ["t_days", "x_km", "MT"]:
                raise ConfigError(f"schedule.path: {path} must have header t_days,x_km,MT")
            rows = [tuple(float(c) for c in r) for r in reader if r]
    except OSError as exc:
        raise ConfigError(f"schedule.path: cannot read {path}: {exc.strerror}") from None
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"schedule.path: {path} has a non-numeric entry") from None
    if not rows:
        raise ConfigError(f"schedule.path: {path} has no rows")
    times = sorted({r[0] for r in rows})
    xs = sorted({r[1] for r in rows})
    grid = {(r[0], r[1]): r[2] for r in rows}
    if len(grid) != len(times) * len(xs):
        raise ConfigError(f"schedule.path: {path} must give every (t_days, x_km) pair exactly once")
    if any(v < 0 for v in grid.values()):
        raise ConfigError(f"schedule.path: {path} has a negative MT")
    levels = tuple(tuple(grid[(t, x)] for x in xs) for t in times)
    return ReleaseTable(tuple(times), tuple(xs), levels)


def config_fields() -> list[str]:
    return [f.name for f in fields(RunConfig)]
