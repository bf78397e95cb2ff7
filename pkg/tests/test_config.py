from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sitwave.config import (
    KEYS,
    ConfigError,
    RunConfig,
    load_config,
    load_release_table,
    parse_config,
    serialize_config,
    with_override,
)
from sitwave.equilibria import sit_threshold
from sitwave.params import reference_params
from sitwave.pde import cfl_limit
from sitwave.schedule import Grid

from conftest import MT1_ORACLE

RECIPES = sorted(p.name for p in resources.files("sitwave.recipes").iterdir()
                 if p.name.endswith(".cfg"))


def recipe_text(name):
    return resources.files("sitwave.recipes").joinpath(name).read_text()


def test_reference_recipe_is_valid():
    cfg = parse_config(recipe_text("table2.cfg"))
    assert cfg.params == reference_params()
    assert cfg.params.mu_m == pytest.approx(1 / 7, rel=1e-15)
    assert cfg.schedule.mode == "none"


@pytest.mark.parametrize("name", RECIPES)
def test_every_recipe_parses_and_round_trips(name):
    cfg = parse_config(recipe_text(name))
    assert parse_config(serialize_config(cfg)) == cfg


def test_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.grid == Grid(150.0, 1501)
    assert cfg.step_control().dt == pytest.approx(0.9 * 0.1**2 / 0.2)


def test_mt1_expressions():
    cfg = parse_config("schedule.mode = corridor\nschedule.mt_massive = 1.1*MT1\n"
                       "schedule.mt_small = MT1/100\nschedule.x_min = 60\nschedule.width = 20\n")
    assert cfg.schedule.mt_massive == pytest.approx(1.1 * MT1_ORACLE, rel=1e-12)
    assert cfg.schedule.mt_small == pytest.approx(MT1_ORACLE / 100, rel=1e-12)
    assert cfg.schedule.x_max == 80.0
    # MT1 tracks the configured parameters
    cfg2 = parse_config("params.mu_m = 0.14\nschedule.mode = uniform\nschedule.mt = MT1\n")
    assert cfg2.schedule.mt == pytest.approx(sit_threshold(reference_params(mu_m=0.14))[1])


@pytest.mark.parametrize("text, needle", [
    ("params.r = 1.3", "params.r must lie in (0, 1)"),
    ("params.phi = -1", "params.phi"),
    ("params.gama = 0.1", "unknown key 'params.gama'"),
    ("params.phi = 1\nparams.phi = 2", "duplicate key 'params.phi'"),
    ("params.phi = ten", "params.phi: expected a number"),
    ("params.phi = __import__('os')", "params.phi: expected a number"),
    ("params.phi = 1/0", "division by zero"),
    ("grid.cell_count = 2.5", "grid.cell_count: expected an integer"),
    ("grid.cell_count = 2", "grid"),
    ("grid.dx = 0.1\ngrid.cell_count = 11", "mutually exclusive"),
    ("output.plots = maybe", "output.plots"),
    ("schedule.mode = sometimes", "schedule.mode: must be one of"),
    ("schedule.mode = uniform", "missing required key schedule.mt"),
    ("schedule.mode = corridor\nschedule.mt_massive = 1", "missing required key schedule.mt_small"),
    ("schedule.mt = 5", "schedule.mt: not used by schedule.mode = none"),
    ("schedule.mode = corridor\nschedule.mt_massive = 1\nschedule.mt_small = 2\n"
     "schedule.x_min = 1\nschedule.x_max = 2", "mt_small"),
    ("schedule.mode = corridor\nschedule.mt_massive = 2\nschedule.mt_small = 1\n"
     "schedule.x_min = 100\nschedule.x_max = 200", "grid.length"),
    ("schedule.mode = dynamic_corridor\nschedule.mt_massive = 2\nschedule.mt_small = 0\n"
     "schedule.x_min = 1\nschedule.x_max = 2", "E1 trigger"),
    ("run.t_end = 10\nrun.snapshot_every = 3", "whole multiple"),
    ("run.t_end = 1\nrun.snapshot_every = 3", "run.t_end"),
    ("tracking.window_start = 50", "tracking.window_start"),
    ("initial.kind = bump", "missing required key initial.center"),
    ("initial.kind = snapshot", "missing required key initial.path"),
    ("params.phi = 0.1\nschedule.mode = uniform\nschedule.mt = MT1", "MT1 is undefined"),
    ("control.cfl_factor = 1.2", "control.cfl_factor"),
    ("just some words", "line 1"),
    ("output.write_every = 2.5", "output.write_every"),
])
def test_errors_name_the_key(text, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert needle in str(exc.value)


def test_dt_above_bound_reports_bound():
    bound = 0.9 * cfl_limit(reference_params(), Grid(150.0, 1501))
    with pytest.raises(ConfigError) as exc:
        parse_config("control.dt = 0.1")
    assert "control.dt" in str(exc.value)
    assert f"{bound:.6g}" in str(exc.value)
    assert parse_config(f"control.dt = {bound}").dt == bound


def test_comments_and_auto():
    cfg = parse_config("# header\n\nparams.phi = 12  # trailing\ncontrol.dt = auto\n")
    assert cfg.params.phi == 12 and cfg.dt is None


def test_load_config_resolves_relative_paths(tmp_path):
    (tmp_path / "table.csv").write_text("t_days,x_km,MT\n0,0,1\n0,10,3\n5,0,0\n5,10,0\n")
    (tmp_path / "run.cfg").write_text("grid.length = 10\ngrid.cell_count = 11\n"
                                      "schedule.mode = explicit\nschedule.path = table.csv\n")
    cfg = load_config(tmp_path / "run.cfg")
    assert cfg.schedule_path == str(tmp_path / "table.csv")
    table = cfg.release_schedule().explicit
    np.testing.assert_allclose(table(1.0, np.array([0.0, 5.0, 10.0])), [1, 2, 3])
    assert not table(6.0, np.array([5.0])).any()
    assert not table(-1.0, np.array([5.0])).any()
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.cfg")


@pytest.mark.parametrize("body, needle", [
    ("a,b,c\n1,2,3\n", "header"),
    ("t_days,x_km,MT\n", "no rows"),
    ("t_days,x_km,MT\n0,0,x\n", "non-numeric"),
    ("t_days,x_km,MT\n0,0,1\n0,1,1\n1,0,1\n", "exactly once"),
    ("t_days,x_km,MT\n0,0,-1\n", "negative"),
])
def test_release_table_errors(tmp_path, body, needle):
    f = tmp_path / "t.csv"
    f.write_text(body)
    with pytest.raises(ConfigError, match=needle):
        load_release_table(f)


def test_override():
    cfg = parse_config(recipe_text("fig6.cfg"))
    wide = with_override(cfg, "schedule.width", 30.0)
    assert wide.schedule.x_max == wide.schedule.x_min + 30.0
    assert with_override(cfg, "params.gamma", 0.1).params.gamma == 0.1
    with pytest.raises(ConfigError):
        with_override(cfg, "params.nope", 1.0)


def test_every_key_documented_in_readme():
    from pathlib import Path

    readme = Path(__file__).resolve().parents[1] / "README.md"
    if not readme.exists():
        pytest.skip("README not written")
    text = readme.read_text()
    missing = [k for k in KEYS if f"`{k}`" not in text]
    assert not missing


finite = dict(allow_nan=False, allow_infinity=False)


@st.composite
def configs(draw):
    lines = [
        f"params.phi = {draw(st.floats(2, 30, **finite))!r}",
        f"params.gamma = {draw(st.floats(0.01, 0.3, **finite))!r}",
        f"params.r = {draw(st.floats(0.05, 0.95, **finite))!r}",
        f"params.d_f = {draw(st.floats(0.01, 1, **finite))!r}",
        f"params.mu_m = {draw(st.floats(0.05, 0.5, **finite))!r}",
    ]
    length = draw(st.floats(20, 300, **finite))
    lines += [f"grid.length = {length!r}", f"grid.cell_count = {draw(st.integers(11, 4001))}"]
    lines.append(f"control.cfl_factor = {draw(st.floats(0.1, 1.0, **finite))!r}")
    lines.append(f"model.sterile = {draw(st.sampled_from(['held', 'diffusing']))}")
    kind = draw(st.sampled_from(["zero", "uniform", "pulse", "bump", "front"]))
    lines += [f"initial.kind = {kind}", f"initial.side = {draw(st.sampled_from(['left', 'right']))}",
              f"initial.width = {draw(st.floats(0.5, 20, **finite))!r}"]
    if kind == "bump":
        lines.append(f"initial.center = {draw(st.floats(0, length, **finite))!r}")
    mode = draw(st.sampled_from(["none", "uniform", "corridor", "dynamic_corridor"]))
    lines.append(f"schedule.mode = {mode}")
    if mode == "uniform":
        lines.append(f"schedule.mt = {draw(st.floats(0, 1e4, **finite))!r}")
    if mode in ("corridor", "dynamic_corridor"):
        x0 = draw(st.floats(0, length / 2, **finite))
        small = draw(st.floats(0.1, 100, **finite))
        lines += [f"schedule.x_min = {x0!r}",
                  f"schedule.x_max = {draw(st.floats(x0 + 1, length, **finite))!r}",
                  f"schedule.mt_small = {small!r}",
                  f"schedule.mt_massive = {small + draw(st.floats(1, 1e4, **finite))!r}"]
    if mode == "dynamic_corridor":
        lines += [f"schedule.shift_step = {draw(st.floats(0.1, 5, **finite))!r}",
                  f"schedule.trigger_every = {draw(st.sampled_from(['auto', '5.0']))}"]
    lines.append(f"schedule.start_day = {draw(st.floats(0, 500, **finite))!r}")
    every = draw(st.sampled_from([0.5, 1.0, 5.0]))
    lines += [f"run.snapshot_every = {every!r}",
              f"run.t_end = {every * draw(st.integers(1, 400))!r}"]
    if draw(st.booleans()):
        lines.append(f"tracking.level = {draw(st.floats(1, 1e4, **finite))!r}")
    lines += [f"output.plots = {draw(st.sampled_from(['true', 'false']))}",
              f"output.dir = {draw(st.sampled_from(['out', 'runs/a']))}"]
    return "\n".join(lines) + "\n"


@settings(max_examples=150, deadline=None)
@given(configs())
def test_round_trip(text):
    cfg = parse_config(text)
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)
