"""Experiment worlds and baseline policies.

Two built-in trajectory families (intersecting line segments and a row of
overlapping circles), a custom pass-through, the two pre-selection
baselines, and a seeded generator of small random instances for property
tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, Placement, Scenario
from .optimizer import AlternatingConfig, initial_placement
from .placement import gd_solve, project_nonneg
from .scheduler import Schedule

# Default line family: four 450 m segments whose six pairs all intersect
# inside a 600 m x 600 m first-quadrant arena.
_LINE_ANGLES_DEG = (0.0, 45.0, 90.0, 135.0)
_LINE_CENTERS = ((300.0, 240.0), (240.0, 300.0), (300.0, 360.0), (360.0, 300.0))

# Default circle family: radius-200 circles with centers 300 m apart on a
# horizontal row, so adjacent circles overlap by 100 m.
_CIRCLE_FIRST_CENTER = (300.0, 300.0)
_CIRCLE_SPACING = 300.0


@dataclass(frozen=True)
class TrajectorySpec:
    """Declarative description of a UGV trajectory family."""

    kind: str = "circle"               # line | circle | custom
    n_ugvs: int = 4
    t_slots: int = 10
    length_m: float = 450.0            # line kind: per-segment length
    radius_m: float = 200.0            # circle kind
    geometry_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("line", "circle", "custom"):
            raise ValueError(f"kind must be line, circle or custom, got {self.kind!r}")
        if self.n_ugvs < 1 or self.t_slots < 1:
            raise ValueError("n_ugvs and t_slots must be >= 1")
        if self.kind == "line" and self.length_m <= 0:
            raise ValueError("length_m must be > 0 for line trajectories")
        if self.kind == "circle" and self.radius_m <= 0:
            raise ValueError("radius_m must be > 0 for circle trajectories")
        if self.kind == "custom" and "trajectories" not in self.geometry_params:
            raise ValueError("custom trajectories require geometry_params['trajectories']")


def _make_scenario(traj: np.ndarray, spec: TrajectorySpec, n_uavs: int,
                   uav_height: float, tx_power: float, slot_duration: float) -> Scenario:
    return Scenario(
        m=n_uavs, n=spec.n_ugvs, t_slots=spec.t_slots,
        heights=np.full(n_uavs, uav_height),
        tx_power=np.full(spec.n_ugvs, tx_power),
        trajectories=traj,
        slot_duration=slot_duration,
    )


def _default_segments(spec: TrajectorySpec) -> np.ndarray:
    """Segment endpoints (n, 2, 2) for the line family."""
    anchors = spec.geometry_params.get("anchors")
    if anchors is not None:
        seg = np.asarray(anchors, dtype=np.float64)
        if seg.shape != (spec.n_ugvs, 2, 2):
            raise ValueError(f"anchors must have shape {(spec.n_ugvs, 2, 2)}")
        return seg
    half = spec.length_m / 2.0
    seg = np.empty((spec.n_ugvs, 2, 2))
    for k in range(spec.n_ugvs):
        angle = math.radians(_LINE_ANGLES_DEG[k % 4])
        cx, cy = _LINE_CENTERS[k % 4]
        cx += 150.0 * (k // 4)         # extra segments shift right
        ux, uy = math.cos(angle), math.sin(angle)
        seg[k, 0] = (cx - half * ux, cy - half * uy)
        seg[k, 1] = (cx + half * ux, cy + half * uy)
    return seg


def line_scenario(spec: TrajectorySpec, n_uavs: int = 2, uav_height: float = 200.0,
                  tx_power: float = 1.0, slot_duration: float = 1.0) -> Scenario:
    """UGVs traversing straight segments at uniform speed, endpoints included.

    With t slots the spacing is length/(t-1); a single slot sits at the
    segment start.
    """
    if spec.kind != "line":
        raise ValueError("spec.kind must be 'line'")
    seg = _default_segments(spec)
    t = spec.t_slots
    frac = np.zeros(1) if t == 1 else np.arange(t) / (t - 1)
    traj = seg[:, 0, None, :] + frac[None, :, None] * (seg[:, 1] - seg[:, 0])[:, None, :]
    return _make_scenario(traj, spec, n_uavs, uav_height, tx_power, slot_duration)


def circle_scenario(spec: TrajectorySpec, n_uavs: int = 2, uav_height: float = 200.0,
                    tx_power: float = 1.0, slot_duration: float = 1.0) -> Scenario:
    """UGVs moving on circles, one full revolution over the horizon.

    UGV k advances 2*pi/t per slot starting from its phase (default 0) on a
    circle centered on the default row unless geometry_params overrides
    centers or phases.
    """
    if spec.kind != "circle":
        raise ValueError("spec.kind must be 'circle'")
    n, t = spec.n_ugvs, spec.t_slots
    centers = spec.geometry_params.get("centers")
    if centers is None:
        x0, y0 = _CIRCLE_FIRST_CENTER
        centers = [(x0 + _CIRCLE_SPACING * k, y0) for k in range(n)]
    centers = np.asarray(centers, dtype=np.float64)
    if centers.shape != (n, 2):
        raise ValueError(f"centers must have shape {(n, 2)}")
    phases = np.asarray(spec.geometry_params.get("phases", np.zeros(n)), dtype=np.float64)
    if phases.shape != (n,):
        raise ValueError(f"phases must have shape {(n,)}")
    angles = phases[:, None] + 2.0 * math.pi * np.arange(t)[None, :] / t
    traj = np.stack([
        centers[:, 0, None] + spec.radius_m * np.cos(angles),
        centers[:, 1, None] + spec.radius_m * np.sin(angles),
    ], axis=2)
    return _make_scenario(traj, spec, n_uavs, uav_height, tx_power, slot_duration)


def custom_scenario(spec: TrajectorySpec, n_uavs: int = 2, uav_height: float = 200.0,
                    tx_power: float = 1.0, slot_duration: float = 1.0) -> Scenario:
    """Scenario from explicit per-UGV per-slot positions."""
    if spec.kind != "custom":
        raise ValueError("spec.kind must be 'custom'")
    traj = np.asarray(spec.geometry_params["trajectories"], dtype=np.float64)
    return _make_scenario(traj, spec, n_uavs, uav_height, tx_power, slot_duration)


def build_scenario(spec: TrajectorySpec, **world) -> Scenario:
    """Dispatch on spec.kind."""
    builder = {"line": line_scenario, "circle": circle_scenario,
               "custom": custom_scenario}[spec.kind]
    return builder(spec, **world)


def _pair_distance(scenario: Scenario, p: int, q: int, metric: str) -> float:
    gaps = np.linalg.norm(scenario.trajectories[p] - scenario.trajectories[q], axis=1)
    return float(gaps.sum() if metric == "sum" else gaps.max())


def _selection_schedule(scenario: Scenario, pair: tuple[int, int]) -> Schedule:
    """Selected UGVs talk to UAV 0 and UAV 1 in every slot; others idle."""
    a = np.zeros((scenario.n, scenario.m, scenario.t_slots))
    for uav, ugv in enumerate(pair[:scenario.m]):
        a[ugv, uav, :] = 1.0
    return Schedule(a)


def _selection_placement(scenario: Scenario, params: ChannelParams, pair: tuple[int, int],
                         schedule: Schedule, config: AlternatingConfig,
                         seed: int) -> Placement:
    rng = np.random.default_rng(seed)
    fallback = initial_placement(scenario, rng)
    xy = np.array(fallback.xy)
    for uav, ugv in enumerate(pair[:scenario.m]):
        mean = scenario.trajectories[ugv].mean(axis=0)
        xy[uav] = mean + rng.uniform(-10.0, 10.0, size=2)
    start = Placement(project_nonneg(xy))
    return gd_solve(start, schedule, scenario, params, config.gd).placement


def baseline_fixed_selection(scenario: Scenario, params: ChannelParams,
                             config: AlternatingConfig = AlternatingConfig(),
                             pair_metric: str = "sum") -> tuple[Schedule, Placement]:
    """Pre-select the UGV pair with maximum separation over the whole horizon
    (summed per-slot distance by default, max-over-slots optional), keep it
    scheduled in every slot, then optimize only the UAV positions.

    With a single UAV only the first selected UGV is scheduled.
    """
    if scenario.n < 2:
        raise ValueError("fixed selection needs at least two UGVs")
    if pair_metric not in ("sum", "max"):
        raise ValueError("pair_metric must be 'sum' or 'max'")
    best = None
    best_pair = (0, 1)
    for p in range(scenario.n):
        for q in range(p + 1, scenario.n):
            sep = _pair_distance(scenario, p, q, pair_metric)
            if best is None or sep > best:
                best = sep
                best_pair = (p, q)
    schedule = _selection_schedule(scenario, best_pair)
    placement = _selection_placement(scenario, params, best_pair, schedule,
                                     config, config.seed)
    return schedule, placement


def baseline_random_selection(scenario: Scenario, params: ChannelParams,
                              config: AlternatingConfig = AlternatingConfig(),
                              seed: int | None = None) -> tuple[Schedule, Placement]:
    """Pre-select a uniformly random UGV pair, fixed for all slots, then
    optimize only the UAV positions."""
    if scenario.n < 2:
        raise ValueError("random selection needs at least two UGVs")
    if seed is None:
        seed = config.seed
    rng = np.random.default_rng(seed)
    p, q = sorted(rng.choice(scenario.n, size=2, replace=False).tolist())
    schedule = _selection_schedule(scenario, (p, q))
    placement = _selection_placement(scenario, params, (p, q), schedule, config, seed)
    return schedule, placement


def random_instance(seed: int, n: int, m: int, t: int,
                    arena_m: float = 600.0) -> Scenario:
    """Seeded random piecewise-linear trajectories inside a square arena."""
    if n < 1 or m < 1 or t < 1 or arena_m <= 0:
        raise ValueError("sizes and arena_m must be positive")
    rng = np.random.default_rng(seed)
    start = rng.uniform(0.05 * arena_m, 0.95 * arena_m, size=(n, 1, 2))
    if t > 1:
        steps = rng.uniform(-arena_m / (2.0 * t), arena_m / (2.0 * t), size=(n, t - 1, 2))
        traj = np.concatenate([start, start + np.cumsum(steps, axis=1)], axis=1)
    else:
        traj = start
    traj = np.clip(traj, 0.0, arena_m)
    return Scenario(m=m, n=n, t_slots=t, heights=np.full(m, 200.0),
                    tx_power=np.ones(n), trajectories=traj)
