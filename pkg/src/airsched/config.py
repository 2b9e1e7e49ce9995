"""Run configuration: JSON schema v1, validation and construction.

A config file fully determines a run (together with the seed); dB noise
figures are converted to linear watts on ingestion and echoed back in the
artifacts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, Scenario
from .optimizer import AlternatingConfig
from .placement import GdConfig
from .scenario import TrajectorySpec, build_scenario
from .scheduler import DcConfig, InnerSolverConfig

SCHEMA_VERSION = 1

COMMANDS = ("solve", "baseline-fixed", "baseline-random", "oracle", "sweep", "validate")


class ValidationError(ValueError):
    """Raised when a config violates the schema; carries field-path messages."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


def db_to_linear(db: float) -> float:
    """Power ratio from a decibel figure (reference 1 W, i.e. dBW)."""
    return 10.0 ** (db / 10.0)


def default_config() -> dict:
    """Shipped defaults: the standard circle world and solver settings."""
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "solve",
        "seed": 0,
        "output_dir": "out",
        "scenario": {
            "kind": "circle",
            "n_ugvs": 4,
            "t_slots": 10,
            "length_m": 450.0,
            "radius_m": 200.0,
            "geometry_params": {},
        },
        "world": {
            "n_uavs": 2,
            "uav_height_m": 200.0,
            "tx_power_w": 1.0,
            "slot_duration_s": 1.0,
        },
        "channel": {
            "fc_hz": 2e6,
            "g_t": 1.0,
            "g_r": 1.0,
            "mu_los": 1.0,
            "mu_nlos": 20.0,
            "alpha_env": 0.6,
            "gamma_env": 0.11,
            "n0_db": -90.0,
        },
        "solver": {
            "epsilon_outer": 1e-3,
            "max_rounds": 20,
            "dc": {
                "eta": None,
                "eta_growth": 2.0,
                "eta_max": None,
                "epsilon": 1e-4,
                "max_dc_iters": 100,
                "inner": {"max_iters": 400, "gap_tol": 1e-5},
            },
            "gd": {
                "step_init": 50.0,
                "backtrack": 0.5,
                "armijo_c": 1e-4,
                "max_iters": 200,
                "grad_tol": 1e-4,
                "fd_step": 0.1,
            },
        },
        "sweep_ugv_counts": [2, 3, 4, 5, 6],
        "sweep_seeds": 5,
    }


def _merge_defaults(cfg: dict, defaults: dict) -> dict:
    out = {}
    for key, default in defaults.items():
        if key in cfg and isinstance(default, dict) and isinstance(cfg[key], dict):
            out[key] = _merge_defaults(cfg[key], default)
        elif key in cfg:
            out[key] = cfg[key]
        else:
            out[key] = default
    for key in cfg:
        if key not in defaults:
            out[key] = cfg[key]
    return out


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _check_positive(problems, cfg, path, *names):
    for name in names:
        value = cfg.get(name)
        if not _is_num(value) or value <= 0:
            problems.append(f"{path}.{name}: must be a positive number")


def validate_config(cfg: dict) -> list[str]:
    """Schema and invariant check; returns one message per violation."""
    problems: list[str] = []
    if not isinstance(cfg, dict):
        return ["config: must be a JSON object"]
    known_top = set(default_config()) | {"command"}
    for key in cfg:
        if key not in known_top:
            problems.append(f"{key}: unknown field")
    merged = _merge_defaults(cfg, default_config())

    if merged.get("schema_version") != SCHEMA_VERSION:
        problems.append(f"schema_version: must be {SCHEMA_VERSION}")
    if merged.get("command") not in COMMANDS:
        problems.append(f"command: must be one of {', '.join(COMMANDS)}")
    if not isinstance(merged.get("seed"), int) or isinstance(merged.get("seed"), bool):
        problems.append("seed: must be an integer")
    if not isinstance(merged.get("output_dir"), str) or not merged["output_dir"]:
        problems.append("output_dir: must be a nonempty string")

    sc = merged["scenario"]
    if sc.get("kind") not in ("line", "circle", "custom"):
        problems.append("scenario.kind: must be line, circle or custom")
    for name in ("n_ugvs", "t_slots"):
        if not isinstance(sc.get(name), int) or isinstance(sc.get(name), bool) \
                or sc[name] < 1:
            problems.append(f"scenario.{name}: must be an integer >= 1")
    if sc.get("kind") == "line":
        _check_positive(problems, sc, "scenario", "length_m")
    if sc.get("kind") == "circle":
        _check_positive(problems, sc, "scenario", "radius_m")
    geom = sc.get("geometry_params", {})
    if not isinstance(geom, dict):
        problems.append("scenario.geometry_params: must be an object")
    elif sc.get("kind") == "custom":
        traj = geom.get("trajectories")
        shape_ok = False
        if traj is not None:
            try:
                arr = np.asarray(traj, dtype=float)
                shape_ok = arr.shape == (sc.get("n_ugvs"), sc.get("t_slots"), 2)
            except (TypeError, ValueError):
                shape_ok = False
        if traj is None:
            problems.append("scenario.geometry_params.trajectories: required for custom kind")
        elif not shape_ok:
            problems.append(
                "scenario.geometry_params.trajectories: must be numeric with shape "
                f"({sc.get('n_ugvs')}, {sc.get('t_slots')}, 2)")

    world = merged["world"]
    if not isinstance(world.get("n_uavs"), int) or isinstance(world.get("n_uavs"), bool) \
            or world["n_uavs"] < 1:
        problems.append("world.n_uavs: must be an integer >= 1")
    for name, count in (("uav_height_m", world.get("n_uavs")),
                        ("tx_power_w", sc.get("n_ugvs"))):
        value = world.get(name)
        if _is_num(value):
            if value <= 0:
                problems.append(f"world.{name}: must be > 0")
        elif isinstance(value, list) and all(_is_num(x) for x in value):
            if count is not None and len(value) != count:
                problems.append(f"world.{name}: list must have length {count}")
            if any(x <= 0 for x in value):
                problems.append(f"world.{name}: all entries must be > 0")
        else:
            problems.append(f"world.{name}: must be a positive number or list of them")
    _check_positive(problems, world, "world", "slot_duration_s")

    ch = merged["channel"]
    _check_positive(problems, ch, "channel", "fc_hz", "g_t", "g_r", "mu_los", "mu_nlos")
    if not _is_num(ch.get("gamma_env")) or ch["gamma_env"] < 0:
        problems.append("channel.gamma_env: must be a number >= 0")
    if not _is_num(ch.get("alpha_env")) or ch["alpha_env"] <= 0:
        problems.append("channel.alpha_env: must be > 0")
    if _is_num(ch.get("mu_los")) and _is_num(ch.get("mu_nlos")) \
            and ch["mu_nlos"] < ch["mu_los"]:
        problems.append("channel.mu_nlos: must be >= channel.mu_los")
    has_db = "n0_db" in ch and ch["n0_db"] is not None
    has_w = "n0_w" in ch and ch["n0_w"] is not None
    if has_db and has_w:
        problems.append("channel.n0_db: give either n0_db or n0_w, not both")
    elif has_w:
        if not _is_num(ch["n0_w"]) or ch["n0_w"] <= 0:
            problems.append("channel.n0_w: must be > 0")
    elif has_db:
        if not _is_num(ch["n0_db"]):
            problems.append("channel.n0_db: must be a number")
    else:
        problems.append("channel.n0_db: one of n0_db or n0_w is required")

    so = merged["solver"]
    _check_positive(problems, so, "solver", "epsilon_outer")
    if not isinstance(so.get("max_rounds"), int) or so.get("max_rounds", 0) < 1:
        problems.append("solver.max_rounds: must be an integer >= 1")
    dc = so.get("dc", {})
    if dc.get("eta") is not None and (not _is_num(dc["eta"]) or dc["eta"] < 0):
        problems.append("solver.dc.eta: must be >= 0 or null")
    if not _is_num(dc.get("eta_growth")) or dc["eta_growth"] <= 1:
        problems.append("solver.dc.eta_growth: must be > 1")
    if dc.get("eta_max") is not None and (not _is_num(dc["eta_max"]) or dc["eta_max"] <= 0):
        problems.append("solver.dc.eta_max: must be > 0 or null")
    _check_positive(problems, dc, "solver.dc", "epsilon")
    if not isinstance(dc.get("max_dc_iters"), int) or dc.get("max_dc_iters", 0) < 1:
        problems.append("solver.dc.max_dc_iters: must be an integer >= 1")
    inner = dc.get("inner", {})
    if not isinstance(inner.get("max_iters"), int) or inner.get("max_iters", 0) < 1:
        problems.append("solver.dc.inner.max_iters: must be an integer >= 1")
    _check_positive(problems, inner, "solver.dc.inner", "gap_tol")
    gd = so.get("gd", {})
    _check_positive(problems, gd, "solver.gd", "step_init", "grad_tol", "fd_step")
    for name in ("backtrack", "armijo_c"):
        if not _is_num(gd.get(name)) or not 0 < gd[name] < 1:
            problems.append(f"solver.gd.{name}: must be in (0, 1)")
    if not isinstance(gd.get("max_iters"), int) or gd.get("max_iters", 0) < 1:
        problems.append("solver.gd.max_iters: must be an integer >= 1")

    counts = merged.get("sweep_ugv_counts")
    if not isinstance(counts, list) or not counts or \
            not all(isinstance(x, int) and not isinstance(x, bool) and x >= 2 for x in counts):
        problems.append("sweep_ugv_counts: must be a list of integers >= 2")
    if not isinstance(merged.get("sweep_seeds"), int) or merged.get("sweep_seeds", 0) < 1:
        problems.append("sweep_seeds: must be an integer >= 1")
    if merged.get("command") == "sweep":
        if not _is_num(world.get("tx_power_w")):
            problems.append("world.tx_power_w: must be a scalar for sweep runs "
                            "(the UGV count varies)")
        if merged["scenario"].get("kind") == "custom":
            problems.append("scenario.kind: custom trajectories cannot be swept "
                            "over UGV counts")
    return problems


@dataclass(frozen=True)
class RunConfig:
    """Validated, normalized run configuration."""

    command: str
    seed: int
    output_dir: str
    spec: TrajectorySpec
    n_uavs: int
    uav_height_m: object         # scalar or list
    tx_power_w: object           # scalar or list
    slot_duration_s: float
    channel: ChannelParams
    solver: AlternatingConfig
    sweep_ugv_counts: tuple[int, ...]
    sweep_seeds: int
    raw: dict = field(repr=False, default_factory=dict)

    def scenario(self, n_ugvs: int | None = None) -> Scenario:
        spec = self.spec
        if n_ugvs is not None and n_ugvs != spec.n_ugvs:
            if spec.kind == "custom":
                raise ValueError("cannot resize a custom trajectory set")
            spec = TrajectorySpec(kind=spec.kind, n_ugvs=n_ugvs, t_slots=spec.t_slots,
                                  length_m=spec.length_m, radius_m=spec.radius_m,
                                  geometry_params=spec.geometry_params)
        return build_scenario(
            spec, n_uavs=self.n_uavs, uav_height=self.uav_height_m,
            tx_power=self.tx_power_w, slot_duration=self.slot_duration_s)

    def solver_for_seed(self, seed: int) -> AlternatingConfig:
        base = self.solver
        return AlternatingConfig(epsilon_outer=base.epsilon_outer,
                                 max_rounds=base.max_rounds, seed=seed,
                                 dc=base.dc, gd=base.gd)


def parse_config(cfg: dict, command: str | None = None,
                 seed: int | None = None, output_dir: str | None = None) -> RunConfig:
    """Validate and normalize; CLI overrides take precedence over the file."""
    problems = validate_config(cfg)
    if problems:
        raise ValidationError(problems)
    merged = _merge_defaults(cfg, default_config())
    ch = merged["channel"]
    n0 = ch["n0_w"] if ch.get("n0_w") is not None else db_to_linear(ch["n0_db"])
    channel = ChannelParams(
        fc=ch["fc_hz"], g_t=ch["g_t"], g_r=ch["g_r"], mu_los=ch["mu_los"],
        mu_nlos=ch["mu_nlos"], alpha_env=ch["alpha_env"], gamma_env=ch["gamma_env"],
        n0=n0)
    sc = merged["scenario"]
    spec = TrajectorySpec(kind=sc["kind"], n_ugvs=sc["n_ugvs"], t_slots=sc["t_slots"],
                          length_m=sc["length_m"], radius_m=sc["radius_m"],
                          geometry_params=sc.get("geometry_params", {}))
    so = merged["solver"]
    solver = AlternatingConfig(
        epsilon_outer=so["epsilon_outer"], max_rounds=so["max_rounds"],
        seed=seed if seed is not None else merged["seed"],
        dc=DcConfig(eta=so["dc"]["eta"], eta_growth=so["dc"]["eta_growth"],
                    eta_max=so["dc"]["eta_max"], epsilon=so["dc"]["epsilon"],
                    max_dc_iters=so["dc"]["max_dc_iters"],
                    inner=InnerSolverConfig(max_iters=so["dc"]["inner"]["max_iters"],
                                            gap_tol=so["dc"]["inner"]["gap_tol"])),
        gd=GdConfig(step_init=so["gd"]["step_init"], backtrack=so["gd"]["backtrack"],
                    armijo_c=so["gd"]["armijo_c"], max_iters=so["gd"]["max_iters"],
                    grad_tol=so["gd"]["grad_tol"], fd_step=so["gd"]["fd_step"]))
    world = merged["world"]
    return RunConfig(
        command=command if command is not None else merged["command"],
        seed=seed if seed is not None else merged["seed"],
        output_dir=output_dir if output_dir is not None else merged["output_dir"],
        spec=spec,
        n_uavs=world["n_uavs"],
        uav_height_m=world["uav_height_m"],
        tx_power_w=world["tx_power_w"],
        slot_duration_s=world["slot_duration_s"],
        channel=channel,
        solver=solver,
        sweep_ugv_counts=tuple(merged["sweep_ugv_counts"]),
        sweep_seeds=merged["sweep_seeds"],
        raw=merged,
    )


def load_config(path: str, **overrides) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError([f"config: invalid JSON ({exc})"]) from exc
    return parse_config(cfg, **overrides)
