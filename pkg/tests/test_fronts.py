import numpy as np
import pytest

from sitwave.equilibria import sit_equilibria, wild_equilibrium
from sitwave.fronts import (
    FrontRecord,
    SpeedCurve,
    SpeedEstimate,
    SweepConfig,
    TrackingError,
    critical_level_estimate,
    estimate_speed,
    fit_window,
    front_position,
    plateau_level,
    speed_vs_mt_curve,
    speed_window_default,
    track_fronts,
)
from sitwave.params import ModelError
from sitwave.pde import Profile, StepControl, established_front, pulse_profile, simulate
from sitwave.schedule import Grid


def ramp_profile(values, length=10.0):
    g = Grid(length, len(values))
    z = np.zeros(len(values))
    return Profile(g, z, z, np.asarray(values, float))


def line(speed, t0=0.0, t1=100.0, n=21, x0=0.0):
    return [FrontRecord(t, x0 + speed * t, 1.0) for t in np.linspace(t0, t1, n)]


@pytest.fixture(scope="module")
def free_run():
    from sitwave.params import reference_params

    p = reference_params()
    grid = Grid.from_spacing(150.0, 0.1)
    traj = simulate(p, pulse_profile(grid, wild_equilibrium(p), 5.0), StepControl.auto(p, grid),
                    None, 400, 5)
    return p, traj


def test_ramp_crossing():
    F = 7428.4
    assert front_position(ramp_profile(np.linspace(0, F, 11)), F / 2) == pytest.approx(5.0)
    # decreasing ramp: the population sits on the left
    assert front_position(ramp_profile(np.linspace(F, 0, 101)), F / 4) == pytest.approx(7.5)


def test_no_crossing():
    assert front_position(ramp_profile(np.zeros(11)), 1.0) is None
    assert front_position(ramp_profile(np.full(11, 5.0)), 1.0) is None
    with pytest.raises(ModelError):
        front_position(ramp_profile(np.zeros(11)), 0.0)


def test_side_selects_outermost_crossing():
    prof = ramp_profile([0, 2, 0, 0, 2, 2, 0, 0, 2, 0, 0])
    assert front_position(prof, 1.0, invaded_side="left") == pytest.approx(8.5)
    assert front_position(prof, 1.0, invaded_side="right") == pytest.approx(0.5)


def test_established_front_matches_scan_oracle(p):
    grid = Grid.from_spacing(150.0, 0.1)
    prof = established_front(p, grid, 170.0)
    level = wild_equilibrium(p).F / 2
    x = front_position(prof, level)
    # exhaustive scan for the last node pair straddling the level
    idx = max(i for i in range(grid.cell_count - 1)
              if (prof.F[i] - level) * (prof.F[i + 1] - level) <= 0)
    assert abs(x - grid.x[idx]) <= grid.dx
    assert 40 < x < 75


def test_exact_line():
    est = estimate_speed(line(0.362), (0, 100))
    assert est.speed == pytest.approx(0.362, rel=1e-12)
    assert est.r_squared == pytest.approx(1.0) and est.n_points == 21
    assert estimate_speed(line(-0.362), (0, 100), direction=-1).speed == pytest.approx(0.362)


def test_window_and_errors():
    recs = line(0.3, n=101)
    assert estimate_speed(recs, (50, 60)).n_points == 11
    with pytest.raises(TrackingError, match="5"):
        estimate_speed(recs[:4], (0, 100))
    stuck = [FrontRecord(t, 150.0, 1.0) for t in range(10)]
    with pytest.raises(TrackingError, match="edge"):
        estimate_speed(stuck, (0, 10), domain=(0.0, 150.0))
    with pytest.raises(TrackingError):
        speed_window_default(100.0)
    assert speed_window_default(400.0) == (125.0, 400.0)


def test_r_squared_in_unit_interval(rng):
    for _ in range(50):
        recs = [FrontRecord(t, rng.normal(), 1.0) for t in range(20)]
        est = estimate_speed(recs, (0, 20))
        assert 0.0 <= est.r_squared <= 1.0
    flat = [FrontRecord(t, 3.0, 1.0) for t in range(10)]
    assert estimate_speed(flat, (0, 10)).speed == 0.0


class TestFitWindow:
    def test_interior_front_keeps_window(self):
        recs = line(0.1, 0, 2000, 401, x0=50)
        assert fit_window(recs, (1000, 2000), (0, 300)) == (1000, 2000)

    def test_slides_back_when_front_reaches_edge(self):
        recs = line(0.1, 0, 2000, 401, x0=50)  # x = 140 at t = 900
        lo, hi = fit_window(recs, (1000, 2000), (0, 150))
        assert hi == pytest.approx(900.0)
        assert lo == pytest.approx(125.0)  # clipped at the transient

    def test_keeps_length_when_room(self):
        recs = line(0.05, 0, 4000, 801, x0=10)  # x = 140 at t = 2600
        assert fit_window(recs, (2500, 4000), (0, 150)) == pytest.approx((1100.0, 2600.0))

    def test_edge_before_transient(self):
        with pytest.raises(TrackingError, match="transient"):
            fit_window(line(2.0, 0, 200, 41), (150, 200), (0, 150))

    def test_never_interior(self):
        with pytest.raises(TrackingError):
            fit_window([FrontRecord(t, 1.0, 1.0) for t in range(10)], (0, 10), (0, 150))


def test_level_robustness(free_run):
    p, traj = free_run
    F = wild_equilibrium(p).F
    speeds = [estimate_speed(track_fronts(traj, k * F), (125, 375)).speed for k in (0.25, 0.5, 0.75)]
    assert (max(speeds) - min(speeds)) / np.mean(speeds) < 0.03


def test_free_run_fit_quality(free_run):
    p, traj = free_run
    est = estimate_speed(track_fronts(traj, wild_equilibrium(p).F / 2), (125, 375))
    assert est.r_squared > 0.999 and est.speed > 0


def test_plateau_level(p):
    assert plateau_level(p, 0.0) == pytest.approx(wild_equilibrium(p).F / 2)
    assert plateau_level(p, 1000.0) == pytest.approx(sit_equilibria(p, 1000.0).get("E2").state.F / 2)
    with pytest.raises(ModelError):
        plateau_level(p, 5000.0)


def test_critical_level_interpolation():
    est = lambda s: SpeedEstimate(s, 1.0, (0, 1), 5)  # noqa: E731
    curve = SpeedCurve([(3000.0, est(0.04), ""), (3720.0, est(-0.008), "")], (3000.0, 3720.0))
    assert critical_level_estimate(curve) == pytest.approx(3000 + 720 * 0.04 / 0.048)
    assert critical_level_estimate(SpeedCurve([], None)) is None


def test_small_sweep_mechanics(p):
    cfg = SweepConfig(length=120.0, dx=0.2, front_age=60.0, t_end=200.0, window=(130.0, 200.0))
    curve = speed_vs_mt_curve(p, [0.0, 2000.0], cfg)
    s0, s1 = curve.speeds()
    assert s0 > s1 > 0 and curve.mt_critical is None
    with pytest.raises(ModelError):
        speed_vs_mt_curve(p, [4000.0], cfg)


def test_sweep_marks_failed_points(p):
    # window after the horizon leaves no records: the point fails, the sweep does not
    cfg = SweepConfig(length=60.0, dx=0.2, front_age=60.0, t_end=50.0, window=(300.0, 400.0))
    curve = speed_vs_mt_curve(p, [0.0, 1000.0], cfg)
    assert curve.speeds() == [None, None]
    assert all(note.startswith("failed") for _, _, note in curve.rows)
