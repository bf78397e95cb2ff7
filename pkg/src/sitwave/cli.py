"""Command-line entry points: analyze, speed, simulate, sweep."""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .config import ConfigError, RunConfig, load_config, parse_config, with_override
from .equilibria import (
    basic_offspring_number,
    check_bistable_hypotheses,
    sit_equilibria,
    threshold_coefficient,
    wild_equilibrium,
)
from .fronts import TrackingError, estimate_speed, fit_window, plateau_level, track_fronts
from .params import ModelError
from .pde import (
    Profile,
    bump_profile,
    established_front,
    pulse_profile,
    simulate,
    uniform_profile,
    zero_profile,
)
from .strategy import Scenario, assess_strategy
from .wavespeed import check_monostable_hypotheses, minimal_speed

log = logging.getLogger("sitwave")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
WORKERS_ENV = "SITWAVE_WORKERS"
SWEEPABLE = {
    "params.gamma": "c_bar",
    "params.d_f": "c_bar",
    "schedule.mt": "front_speed",
    "schedule.width": "classification",
    "schedule.start_day": "classification",
}


# ---------------------------------------------------------------- helpers

def recipe_names() -> list[str]:
    root = resources.files("sitwave") / "recipes"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def read_config(ref: str) -> RunConfig:
    """Load a config file, or a shipped recipe by name (``fig6`` or ``fig6.cfg``)."""
    path = Path(ref)
    if path.exists():
        return load_config(path)
    name = path.name[:-4] if path.name.endswith(".cfg") else path.name
    if path.parent == Path(".") and name in recipe_names():
        text = (resources.files("sitwave") / "recipes" / f"{name}.cfg").read_text()
        return parse_config(text)
    raise ConfigError(f"config {ref} not found (recipes: {', '.join(recipe_names())})")


def build_initial(cfg: RunConfig) -> Profile:
    p, grid, ini = cfg.params, cfg.grid, cfg.initial
    if ini.kind == "zero":
        return zero_profile(grid)
    if ini.kind == "snapshot":
        prof = io.read_snapshot(ini.path)
        if prof.grid.cell_count != grid.cell_count or abs(prof.grid.length - grid.length) > 1e-9:
            raise ConfigError("initial.path: snapshot grid differs from grid.length/grid.cell_count")
        prof.MT = np.zeros(grid.cell_count) if not cfg.diffusing else prof.MT
        return prof
    star = wild_equilibrium(p).scaled(ini.height) if basic_offspring_number(p) > 1 else None
    if star is None:
        raise ModelError(f"initial.kind = {ini.kind} scales the wild equilibrium, "
                         "which needs offspring number > 1")
    if ini.kind == "uniform":
        return uniform_profile(grid, star)
    if ini.kind == "pulse":
        return pulse_profile(grid, star, ini.width, ini.side)
    if ini.kind == "bump":
        return bump_profile(grid, star, ini.center, ini.width)
    front = established_front(p, grid, ini.age, ini.side, ini.width, cfg.cfl_factor)
    if ini.height != 1.0:
        front = Profile(grid, front.A * ini.height, front.M * ini.height,
                        front.F * ini.height, front.MT)
    return front


def front_level(cfg: RunConfig) -> Optional[float]:
    if cfg.tracking.level is not None:
        return cfg.tracking.level
    p = cfg.params
    if basic_offspring_number(p) <= 1:
        return None
    s = cfg.schedule
    if s.mode == "uniform" and s.mt > 0:
        try:
            return plateau_level(p, s.mt)
        except ModelError:
            return 0.5 * wild_equilibrium(p).F
    return 0.5 * wild_equilibrium(p).F


def _window(cfg: RunConfig, t_last: float) -> tuple[float, float]:
    tr = cfg.tracking
    start = tr.window_start if tr.window_start is not None else tr.transient
    end = tr.window_end if tr.window_end is not None else t_last
    return (start, end)


def _speed_dict(est) -> Optional[dict]:
    if est is None:
        return None
    return {"speed": est.speed, "r_squared": est.r_squared,
            "window": list(est.window), "n_points": est.n_points}


# ---------------------------------------------------------------- analyze / speed

def analyze(cfg: RunConfig) -> dict:
    p = cfg.params
    mt = cfg.mt_reference()
    R = basic_offspring_number(p)
    rep = sit_equilibria(p, mt)
    out: dict = {
        "R": R,
        "Q": threshold_coefficient(p),
        "MT1": rep.MT1,
        "mt": mt,
        "regime": rep.regime,
        "equilibria": [
            {"label": e.label, "A": e.state.A, "M": e.state.M, "F": e.state.F,
             "stability_modulus": e.modulus, "stable": e.stable}
            for e in rep.equilibria
        ],
        "validity": p.validity_report(),
    }
    if rep.regime == "below_threshold":
        e1, e2 = rep.get("E1").state, rep.get("E2").state
        out["ordering"] = "0 < E1 < E2" if (e1.lt(e2) and min(e1) > 0) else "violated"
        hyp = check_bistable_hypotheses(p, mt)
        out["bistable_hypotheses"] = {"ok": hyp.ok, "checks": hyp.checks, "failures": hyp.failures}
    if rep.regime == "no_control":
        sp = minimal_speed(p)
        out["c_bar"] = sp.c_bar
        out["mu_bar"] = sp.mu_bar
        hyp = check_monostable_hypotheses(p, samples=2500)
        out["monostable_hypotheses"] = {"ok": hyp.ok, "checks": hyp.checks,
                                        "failures": hyp.failures}
    return out


def format_analysis(rep: dict) -> str:
    lines = [f"offspring number R = {rep['R']:.6g}", f"Q = {rep['Q']:.6g}"]
    if rep["MT1"] is not None:
        lines.append(f"MT1 = {rep['MT1']:.6g}")
    lines.append(f"sterile level = {rep['mt']:.6g}  regime = {rep['regime']}")
    for e in rep["equilibria"]:
        lines.append(f"  {e['label']:8s} A = {e['A']:.6g}  M = {e['M']:.6g}  F = {e['F']:.6g}"
                     f"  s(J) = {e['stability_modulus']:.6g}"
                     f"  {'stable' if e['stable'] else 'unstable'}")
    if "ordering" in rep:
        lines.append(f"ordering: {rep['ordering']}")
    if "c_bar" in rep:
        lines.append(f"minimal speed c = {rep['c_bar']:.6g} km/day (mu = {rep['mu_bar']:.6g})")
    for key in ("bistable_hypotheses", "monostable_hypotheses"):
        if key in rep:
            h = rep[key]
            lines.append(f"{key.replace('_', ' ')}: {'ok' if h['ok'] else 'FAILED'}")
            lines += [f"  {f}" for f in h["failures"]]
    return "\n".join(lines)


def speed_report(cfg: RunConfig) -> dict:
    sp = minimal_speed(cfg.params)
    return {
        "c_bar": sp.c_bar,
        "mu_bar": sp.mu_bar,
        "cubic_root": sp.cubic_root,
        "cubic_coeffs": sp.cubic_coeffs,
        "cubic_residual": sp.cubic_residual,
        "oracle_c_bar": sp.oracle_c_bar,
        "oracle_mu_bar": sp.oracle_mu_bar,
        "oracle_gap": sp.oracle_gap,
    }


# ---------------------------------------------------------------- simulate

def run_simulation(cfg: RunConfig, out_dir: Optional[Path] = None) -> dict:
    """Run one configured simulation; writes files when ``out_dir`` is given."""
    p = cfg.params
    initial = build_initial(cfg)
    sched = cfg.release_schedule()
    corridor = sched.mode in ("corridor", "dynamic_corridor")
    if corridor and sched.mt_small > 0 and sched.e1 is None:
        sched = sched.with_trigger(p)
    ctl = cfg.step_control()
    traj = simulate(p, initial, ctl, sched, cfg.t_end, cfg.snapshot_every,
                    diffusing=cfg.diffusing, census_threshold=cfg.census_threshold)
    side = cfg.invaded_side()
    direction = 1 if side == "left" else -1
    level = front_level(cfg)
    records = track_fronts(traj, level, cfg.tracking.field, side) if level else []
    summary = dict(traj.summary)
    summary["front_level"] = level
    summary["invaded_side"] = side
    t_last = float(traj.times[-1])
    domain = (0.0, cfg.grid.length)
    try:
        win = fit_window(records, _window(cfg, t_last), domain, transient=cfg.tracking.transient)
        est = estimate_speed(records, win, direction, domain=domain)
    except TrackingError as exc:
        est = None
        summary["speed_note"] = str(exc)
    summary["front_speed"] = _speed_dict(est)
    no_release = cfg.schedule.mode == "none" or (cfg.schedule.mode == "uniform"
                                                 and cfg.schedule.mt == 0)
    if no_release and basic_offspring_number(p) > 1:
        summary["c_bar"] = minimal_speed(p).c_bar
    if corridor:
        sc = Scenario(initial, sched, cfg.t_end, cfg.snapshot_every, cfg.cfl_factor,
                      cfg.diffusing, side, level, cfg.strategy.settle,
                      cfg.strategy.final_window, cfg.census_threshold)
        res = assess_strategy(p, traj, sc)
        summary["classification"] = res.classification
        summary["protected_zone_max"] = dict(res.protected_zone_max._asdict())
        summary["protected_zone_contained"] = res.contained
        summary["corridor_final"] = list(traj.corridor_track[-1][1:])
        summary["final_speed"] = _speed_dict(res.final_speed)
        # the engine regime only compares occupied area; report the strategy view
        summary["spread"] = summary["regime"]
        summary["regime"] = {"pushed_back": "blocked"}.get(res.classification, res.classification)
    if out_dir is not None:
        _write_outputs(cfg, traj, records, direction, summary, out_dir)
    summary["_records"] = records
    summary["_trajectory"] = traj
    return summary


def _write_outputs(cfg, traj, records, direction, summary, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    snap_dir = out_dir / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    every = cfg.output.write_every or cfg.snapshot_every
    stride = max(1, int(round(every / cfg.snapshot_every)))
    written = []
    for j, (t, prof) in enumerate(zip(traj.times, traj.snapshots)):
        if j % stride and j != len(traj.times) - 1:
            continue
        name = f"snapshot_t{t:010.3f}.csv"
        io.write_snapshot(snap_dir / name, prof)
        written.append(name)
    speeds = io.trailing_speeds(records, cfg.tracking.span, direction)
    io.write_fronts(out_dir / "fronts.csv", records, speeds)
    if traj.corridor_track:
        io.write_rows(out_dir / "corridor.csv", ("t_days", "x_min_km", "x_max_km"),
                      traj.corridor_track)
    summary = {k: v for k, v in summary.items() if not k.startswith("_")}
    summary["snapshots"] = written
    io.write_json(out_dir / "summary.json", summary)
    if cfg.output.plots:
        plot_dir = out_dir / "plots"
        plot_dir.mkdir(exist_ok=True)
        for name in written:
            io.plot_snapshot_csv(snap_dir / name, plot_dir / name.replace(".csv", ".svg"))


# ---------------------------------------------------------------- sweep

def sweep_point(args) -> dict:
    cfg, key, value = args
    row = {"param": key, "value": value, "metric": SWEEPABLE[key], "result": None,
           "status": "ok", "r_squared": None}
    try:
        c = with_override(cfg, key, value)
        kind = SWEEPABLE[key]
        if kind == "c_bar":
            row["result"] = minimal_speed(c.params).c_bar
        elif kind == "front_speed":
            if c.schedule.mode != "uniform":
                raise ConfigError("schedule.mt sweeps need schedule.mode = uniform")
            s = run_simulation(c)
            if s["front_speed"] is None:
                raise TrackingError(s.get("speed_note", "no front speed"))
            row["result"] = s["front_speed"]["speed"]
            row["r_squared"] = s["front_speed"]["r_squared"]
        else:
            if c.schedule.mode not in ("corridor", "dynamic_corridor"):
                raise ConfigError(f"{key} sweeps need a corridor schedule")
            row["result"] = run_simulation(c)["classification"]
    except Exception as exc:  # mark and continue
        row["status"] = f"failed: {type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
    return row


def workers_from_env() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1")
    return n


def run_sweep(cfg: RunConfig, key: str, values: Sequence[float], workers: int = 1) -> list[dict]:
    if key not in SWEEPABLE:
        raise ConfigError(f"--param {key} is not sweepable (choose from {', '.join(SWEEPABLE)})")
    if not values:
        raise ConfigError("--values needs at least one value")
    jobs = [(cfg, key, float(v)) for v in values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(min(workers, len(jobs))) as ex:
            return list(ex.map(sweep_point, jobs))
    return [sweep_point(j) for j in jobs]


def sign_change(rows: list[dict]) -> Optional[tuple[float, float]]:
    pts = sorted((r["value"], r["result"]) for r in rows
                 if r["status"] == "ok" and isinstance(r["result"], float))
    for (v0, s0), (v1, s1) in zip(pts, pts[1:]):
        if s0 > 0 > s1:
            return (v0, v1)
    return None


def parse_values(text: str) -> list[float]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ConfigError("--values needs at least one value")
    out = []
    for s in items:
        try:
            v = float(s)
        except ValueError:
            raise ConfigError(f"--values: {s!r} is not a number") from None
        if not math.isfinite(v):
            raise ConfigError(f"--values: {s!r} is not finite")
        out.append(v)
    return out


# ---------------------------------------------------------------- entry point

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sitwave", description="Sterile-insect invasion waves and barrier strategies.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    a = sub.add_parser("analyze", help="threshold, equilibria, stability and hypothesis checks")
    a.add_argument("--config", required=True)
    a.add_argument("--out", help="directory for analysis.json")
    s = sub.add_parser("speed", help="minimal wave speed without releases")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="directory for speed.json")
    m = sub.add_parser("simulate", help="run the PDE and write snapshots, fronts and a summary")
    m.add_argument("--config", required=True)
    m.add_argument("--out", help="output directory (default: output.dir)")
    w = sub.add_parser("sweep", help="one run per value of a parameter")
    w.add_argument("--config", required=True)
    w.add_argument("--param", required=True)
    w.add_argument("--values", required=True)
    w.add_argument("--out", required=True)
    sub.add_parser("recipes", help="list shipped recipe configs")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = make_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def _dispatch(args) -> int:
    if args.command == "recipes":
        print("\n".join(recipe_names()))
        return EXIT_OK
    cfg = read_config(args.config)
    if args.command == "analyze":
        rep = analyze(cfg)
        print(format_analysis(rep))
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            io.write_json(Path(args.out) / "analysis.json", rep)
    elif args.command == "speed":
        rep = speed_report(cfg)
        print(f"c = {rep['c_bar']:.9g} km/day  mu = {rep['mu_bar']:.9g}  "
              f"cubic root = {rep['cubic_root']:.9g}  oracle gap = {rep['oracle_gap']:.2e}")
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            io.write_json(Path(args.out) / "speed.json", rep)
    elif args.command == "simulate":
        out = Path(args.out or cfg.output.dir)
        s = run_simulation(cfg, out)
        line = f"regime = {s['regime']}  final census = {s['final_census']:.6g}"
        if "classification" in s:
            line += f"  strategy = {s['classification']}"
            if s.get("final_speed"):
                line += f"  final speed = {s['final_speed']['speed']:.6g} km/day"
        elif s.get("front_speed"):
            line += f"  front speed = {s['front_speed']['speed']:.6g} km/day"
        print(line)
        print(f"wrote {out}")
    elif args.command == "sweep":
        values = parse_values(args.values)
        rows = run_sweep(cfg, args.param, values, workers_from_env())
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_rows(out / "sweep.csv", ("param", "value", "metric", "result", "r_squared", "status"),
                      [(r["param"], r["value"], r["metric"], r["result"], r["r_squared"], r["status"])
                       for r in rows])
        for r in rows:
            print(f"{r['param']} = {r['value']:.6g}  {r['metric']} = {r['result']}  {r['status']}")
        if SWEEPABLE[args.param] == "front_speed":
            br = sign_change(rows)
            print("sign change: " + (f"between {br[0]:g} and {br[1]:g}" if br else "none"))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
