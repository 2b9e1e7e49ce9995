"""airsched: aerial relay placement and air-ground link scheduling.

Co-optimizes fixed-altitude UAV positions and per-slot UAV-UGV link
assignments to maximize the interference-limited sum rate, by alternating a
penalized difference-of-convex scheduling relaxation with projected
gradient ascent on the placement.
"""
from ._kernels import BACKEND
from .channel import (ChannelParams, Placement, Scenario, elevation_angle,
                      expected_path_loss, link_distance, link_rate, los_probability,
                      path_loss, received_power, received_power_tensor, sum_rate)
from .config import RunConfig, ValidationError, db_to_linear, default_config, load_config
from .optimizer import (AlternatingConfig, BudgetExceededError, PolicyEvaluation,
                        SolveReport, alternate, brute_force_schedule, evaluate_policy)
from .placement import GdConfig, GdResult, gd_solve, placement_gradient, placement_objective, project_nonneg
from .scenario import (TrajectorySpec, baseline_fixed_selection, baseline_random_selection,
                       build_scenario, circle_scenario, custom_scenario, line_scenario,
                       random_instance)
from .scheduler import (DcConfig, DcResult, InnerSolverConfig, Schedule, dc_solve,
                        inner_solve, matching_lmo, penalized_objective, penalty,
                        penalty_majorizer, penalty_residual, round_schedule,
                        surrogate_objective)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "ChannelParams", "Scenario", "Placement", "Schedule", "TrajectorySpec",
    "RunConfig", "ValidationError",
    "DcConfig", "InnerSolverConfig", "GdConfig", "AlternatingConfig",
    "SolveReport", "DcResult", "GdResult", "PolicyEvaluation",
    "BudgetExceededError",
    "link_distance", "elevation_angle", "los_probability", "path_loss",
    "expected_path_loss", "received_power", "received_power_tensor", "link_rate",
    "sum_rate",
    "penalty", "penalty_residual", "penalty_majorizer", "surrogate_objective",
    "penalized_objective", "matching_lmo", "inner_solve", "dc_solve", "round_schedule",
    "placement_objective", "placement_gradient", "project_nonneg", "gd_solve",
    "alternate", "brute_force_schedule", "evaluate_policy",
    "line_scenario", "circle_scenario", "custom_scenario", "build_scenario",
    "baseline_fixed_selection", "baseline_random_selection", "random_instance",
    "db_to_linear", "default_config", "load_config",
]
