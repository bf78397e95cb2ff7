"""Invasion fronts of a mosquito population under sterile-male releases.

Homogeneous equilibria and thresholds, the minimal monostable wave speed,
a positivity-preserving 1-D solver, front tracking and corridor release
strategies.
"""

from .config import ConfigError, RunConfig, load_config, parse_config, serialize_config
from .equilibria import (
    EquilibriumReport,
    HypothesisReport,
    basic_offspring_number,
    check_bistable_hypotheses,
    discriminant,
    sit_equilibria,
    sit_threshold,
    unstable_equilibrium,
    wild_equilibrium,
)
from .fronts import (
    FrontRecord,
    SpeedEstimate,
    SweepConfig,
    TrackingError,
    estimate_speed,
    front_position,
    speed_vs_mt_curve,
    track_fronts,
)
from .kinetics import jacobian, kinetics
from .params import ModelError, ModelParams, State, reference_params
from .pde import (
    Profile,
    StepControl,
    Trajectory,
    established_front,
    homogeneous_ode_oracle,
    simulate,
    step,
)
from .schedule import Grid, ReleaseSchedule, release_field
from .strategy import Scenario, StrategyOutcome, corridor_scenario, run_strategy
from .wavespeed import SpeedResult, check_monostable_hypotheses, minimal_speed

__version__ = "0.1.0"

__all__ = [
    "basic_offspring_number",
    "check_bistable_hypotheses",
    "check_monostable_hypotheses",
    "ConfigError",
    "corridor_scenario",
    "discriminant",
    "EquilibriumReport",
    "established_front",
    "estimate_speed",
    "front_position",
    "FrontRecord",
    "Grid",
    "homogeneous_ode_oracle",
    "HypothesisReport",
    "jacobian",
    "kinetics",
    "load_config",
    "minimal_speed",
    "ModelError",
    "ModelParams",
    "parse_config",
    "Profile",
    "reference_params",
    "release_field",
    "ReleaseSchedule",
    "run_strategy",
    "RunConfig",
    "Scenario",
    "serialize_config",
    "simulate",
    "sit_equilibria",
    "sit_threshold",
    "speed_vs_mt_curve",
    "SpeedEstimate",
    "SpeedResult",
    "State",
    "step",
    "StepControl",
    "StrategyOutcome",
    "SweepConfig",
    "track_fronts",
    "TrackingError",
    "Trajectory",
    "unstable_equilibrium",
    "wild_equilibrium",
]
