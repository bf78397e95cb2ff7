import numpy as np
import pytest

from sitwave.equilibria import sit_threshold, unstable_equilibrium
from sitwave.params import ModelError, State
from sitwave.pde import uniform_profile
from sitwave.schedule import Grid, ReleaseSchedule, advance_corridor, release_field, release_rate_field


@pytest.fixture
def grid():
    return Grid.from_spacing(150.0, 0.1)


@pytest.fixture
def corridor(p):
    MT1 = sit_threshold(p)[1]
    return ReleaseSchedule("corridor", mt_massive=1.1 * MT1, mt_small=MT1 / 100,
                           x_min=60.0, x_max=80.0, start_day=200.0)


def test_grid_geometry(grid):
    assert grid.cell_count == 1501 and grid.dx == pytest.approx(0.1)
    assert grid.weights().sum() == pytest.approx(150.0)
    assert grid.index(70.0) == 700 and grid.index(-5) == 0 and grid.index(1e6) == 1500
    with pytest.raises(ModelError):
        Grid(10.0, 2)
    with pytest.raises(ModelError):
        Grid(0.0, 10)


def test_before_start_is_zero(corridor, grid):
    assert not release_field(corridor, 199.9, grid).any()


def test_corridor_levels(p, corridor, grid):
    MT1 = sit_threshold(p)[1]
    f = release_field(corridor, 250.0, grid)
    assert f[grid.index(70.0)] == pytest.approx(1.1 * MT1)
    assert f[grid.index(85.0)] == 0.0
    assert f[grid.index(30.0)] == pytest.approx(MT1 / 100)
    # both corridor ends are treated
    assert f[grid.index(60.0)] == f[grid.index(80.0)] == pytest.approx(1.1 * MT1)


def test_release_rate_is_level_times_sterile_mortality(p, corridor, grid):
    np.testing.assert_allclose(release_rate_field(corridor, 300.0, grid, p),
                               release_field(corridor, 300.0, grid) * p.mu_t)


def test_uniform_and_none(grid):
    assert np.all(release_field(ReleaseSchedule("uniform", mt=1000.0), 0.0, grid) == 1000.0)
    assert not release_field(ReleaseSchedule(), 50.0, grid).any()


def test_explicit(grid):
    sched = ReleaseSchedule("explicit", explicit=lambda t, x: np.where(x < 10, t, 0.0))
    f = release_field(sched, 3.0, grid)
    assert f[0] == 3.0 and f[-1] == 0.0
    bad = ReleaseSchedule("explicit", explicit=lambda t, x: -np.ones_like(x))
    with pytest.raises(ModelError):
        release_field(bad, 0.0, grid)


@pytest.mark.parametrize("kw, msg", [
    (dict(mode="bogus"), "mode"),
    (dict(mode="corridor", x_min=80, x_max=60, mt_massive=2, mt_small=1), "x_min"),
    (dict(mode="corridor", x_min=10, x_max=20, mt_massive=1, mt_small=2), "mt_small"),
    (dict(mode="corridor", x_min=10, x_max=200, mt_massive=2, mt_small=1), "domain"),
    (dict(mode="uniform", mt=-1.0), "mt"),
    (dict(start_day=-1.0), "start_day"),
    (dict(mode="dynamic_corridor", x_min=1, x_max=2, mt_massive=2, mt_small=1, shift_step=0), "shift_step"),
    (dict(mode="explicit"), "explicit"),
])
def test_validation(kw, msg, grid):
    with pytest.raises(ModelError, match=msg):
        ReleaseSchedule(**kw).validate(grid)


class TestAdvanceCorridor:
    @pytest.fixture
    def dyn(self, p):
        MT1 = sit_threshold(p)[1]
        return ReleaseSchedule("dynamic_corridor", mt_massive=1.8 * MT1, mt_small=MT1 / 100,
                               x_min=60.0, x_max=87.0, start_day=200.0, shift_step=1.0,
                               move_after=0.0).with_trigger(p)

    def test_trigger_is_small_release_e1(self, p, dyn):
        assert dyn.e1 == unstable_equilibrium(p, dyn.mt_small)

    def test_shift_below_e1(self, dyn, grid):
        prof = uniform_profile(grid, dyn.e1.scaled(0.5))
        out = advance_corridor(dyn, prof)
        assert (out.x_min, out.x_max) == (61.0, 88.0) and not out.at_edge
        # vacated band now gets the small release
        f = release_field(out, 300.0, grid)
        assert f[grid.index(60.5)] == pytest.approx(dyn.mt_small)

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_unchanged_if_any_component_above(self, dyn, grid, k):
        s = list(dyn.e1.scaled(0.5))
        s[k] = 2 * dyn.e1[k]
        out = advance_corridor(dyn, uniform_profile(grid, State(*s)))
        assert out == dyn

    def test_equal_is_not_below(self, dyn, grid):
        assert advance_corridor(dyn, uniform_profile(grid, dyn.e1)) == dyn

    def test_clamped_at_edge(self, dyn, grid):
        near = ReleaseSchedule(**{**dyn.__dict__, "x_min": 122.5, "x_max": 149.5})
        prof = uniform_profile(grid, dyn.e1.scaled(0.1))
        once = advance_corridor(near, prof)
        assert once.x_max == pytest.approx(150.0) and once.at_edge
        twice = advance_corridor(once, prof)
        assert twice.x_max == pytest.approx(150.0) and twice.x_min == once.x_min and twice.at_edge

    def test_blocked_until_move_after(self, dyn, grid):
        held = ReleaseSchedule(**{**dyn.__dict__, "move_after": 100.0})
        prof = uniform_profile(grid, dyn.e1.scaled(0.5))
        assert advance_corridor(held, prof, t=250.0) == held
        assert advance_corridor(held, prof, t=300.0).x_min == 61.0

    def test_requires_dynamic_and_trigger(self, corridor, grid, p):
        prof = uniform_profile(grid, State(0, 0, 0))
        with pytest.raises(ModelError):
            advance_corridor(corridor, prof)
        bare = ReleaseSchedule("dynamic_corridor", mt_massive=2.0, mt_small=1.0, x_min=1, x_max=2)
        with pytest.raises(ModelError, match="E1"):
            advance_corridor(bare, prof)
