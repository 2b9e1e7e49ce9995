"""Relay placement for a fixed schedule: projected gradient ascent.

The sum rate is maximized over the planar UAV coordinates (heights stay
fixed) subject to nonnegativity, using the analytic gradient obtained by
chaining through distance, elevation, LoS probability, expected path loss,
received power and interference. Near the elevation threshold of the LoS
model the objective is nonsmooth; affected UAVs fall back to one-sided
finite differences (with a warning).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channel import (LOS_MIN_ELEVATION, ChannelParams, Placement, Scenario,
                      received_power_tensor, sum_rate)

LN2 = math.log(2.0)

MAX_BACKTRACKS = 15


@dataclass(frozen=True)
class GdConfig:
    """Projected gradient ascent settings."""

    step_init: float = 50.0      # meters per unit gradient
    backtrack: float = 0.5
    armijo_c: float = 1e-4
    max_iters: int = 200
    grad_tol: float = 1e-4
    fd_step: float = 0.1         # meters; also the kink guard margin

    def __post_init__(self):
        for name in ("step_init", "max_iters", "grad_tol", "fd_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("backtrack", "armijo_c"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must be in (0, 1)")


def placement_objective(placement: Placement, schedule, scenario: Scenario,
                        params: ChannelParams) -> float:
    """Sum rate of the given schedule at the given placement."""
    return sum_rate(schedule, placement, scenario, params)


def project_nonneg(xy: np.ndarray) -> np.ndarray:
    """Componentwise projection onto the nonnegative orthant."""
    return np.maximum(np.asarray(xy, dtype=np.float64), 0.0)


def _kink_radii(params: ChannelParams, height: float) -> list[float]:
    """Planar distances at which the LoS probability model is nonsmooth."""
    radii = [height / math.tan(LOS_MIN_ELEVATION)]
    if params.gamma_env > 0:
        cap_deg = 15.0 + (1.0 / params.alpha_env) ** (1.0 / params.gamma_env)
        if cap_deg < 90.0:
            radii.append(height / math.tan(math.radians(cap_deg)))
    return radii


def _kink_uavs(a: np.ndarray, r: np.ndarray, scenario: Scenario,
               params: ChannelParams, margin: float) -> np.ndarray:
    """UAVs whose gradient should fall back to finite differences.

    A UAV is affected when some transmitting UGV, in a slot where the UAV
    is receiving, sits within `margin` meters of a nonsmooth radius.
    """
    n, m, t = a.shape
    transmitting = a.sum(axis=1) > 0.0               # (n, t)
    receiving = a.sum(axis=0) > 0.0                  # (m, t)
    relevant = transmitting[:, None, :] & receiving[None, :, :]
    flagged = np.zeros(m, dtype=bool)
    for j in range(m):
        if not relevant[:, j, :].any():
            continue
        for radius in _kink_radii(params, float(scenario.heights[j])):
            near = np.abs(r[:, j, :] - radius) < margin
            if (near & relevant[:, j, :]).any():
                flagged[j] = True
    return flagged


def placement_gradient(placement: Placement, schedule, scenario: Scenario,
                       params: ChannelParams, fd_step: float = 0.1) -> np.ndarray:
    """Gradient of the sum rate w.r.t. the planar UAV coordinates, shape (m, 2).

    Analytic except for UAVs with an active link within fd_step meters of an
    elevation-model kink, which are differentiated one-sidedly instead.
    """
    a = np.ascontiguousarray(schedule.a if hasattr(schedule, "a") else schedule,
                             dtype=np.float64)
    xy = placement.xy
    n, m, t = a.shape
    heights = scenario.heights
    traj = scenario.trajectories

    u = xy[None, :, 0, None] - traj[:, None, :, 0]
    v = xy[None, :, 1, None] - traj[:, None, :, 1]
    r2 = u * u + v * v
    d2 = r2 + (heights**2)[None, :, None]
    d = np.sqrt(d2)
    theta = np.arcsin(heights[None, :, None] / d)
    base = np.degrees(theta) - 15.0
    raw = np.where(base > 0,
                   params.alpha_env * np.power(np.maximum(base, 0.0), params.gamma_env),
                   0.0)
    p_los = np.clip(raw, 0.0, 1.0)
    mu_eff = p_los * params.mu_los + (1.0 - p_los) * params.mu_nlos
    kappa = params.free_space_factor
    expected = kappa * d2 * mu_eff
    power = scenario.tx_power[:, None, None] / expected

    smooth = (base > 0) & (raw < 1.0) & (params.gamma_env > 0)
    dp_dtheta = np.where(
        smooth,
        params.alpha_env * params.gamma_env
        * np.power(np.maximum(base, 1e-300), params.gamma_env - 1.0)
        * (180.0 / math.pi),
        0.0)
    r = np.sqrt(r2)
    overhead = r <= 1e-12
    r_safe = np.where(overhead, 1.0, r)
    h = heights[None, :, None]
    dtheta_dx = np.where(overhead, 0.0, -h * u / (d2 * r_safe))
    dtheta_dy = np.where(overhead, 0.0, -h * v / (d2 * r_safe))
    dmu = params.mu_los - params.mu_nlos

    def power_partial(dd_dc, dtheta_dc):
        de = kappa * (2.0 * d * mu_eff * dd_dc + d2 * dmu * dp_dtheta * dtheta_dc)
        return -power * de / expected

    dpow_x = power_partial(u / d, dtheta_dx)
    dpow_y = power_partial(v / d, dtheta_dy)

    c = a.sum(axis=1)                                  # (n, t) transmit mass
    inter = _kernels.interference(a, np.ascontiguousarray(power))
    denom = a * power + inter + params.n0
    noise = inter + params.n0

    def assemble(dpow):
        wcol = np.einsum("pt,pjt->jt", c, dpow)
        w = wcol[None, :, :] - c[:, None, :] * dpow
        return ((a * dpow + w) / denom - w / noise).sum(axis=(0, 2)) / LN2

    grad = np.stack([assemble(dpow_x), assemble(dpow_y)], axis=1)

    flagged = _kink_uavs(a, r, scenario, params, fd_step)
    if flagged.any():
        warnings.warn(
            "active link near an elevation-model kink; using one-sided finite "
            f"differences for UAV(s) {np.nonzero(flagged)[0].tolist()}")
        base_val = placement_objective(placement, schedule, scenario, params)
        for j in np.nonzero(flagged)[0]:
            for axis in range(2):
                bumped = np.array(placement.xy)
                bumped[j, axis] += fd_step
                val = placement_objective(Placement(bumped), schedule, scenario, params)
                grad[j, axis] = (val - base_val) / fd_step
    return grad


@dataclass(frozen=True)
class GdResult:
    placement: Placement
    trace: tuple[float, ...]     # objective at the start and after each accepted step
    converged: bool
    reason: str                  # grad_tol | line_search | max_iters
    iterations: int


def gd_solve(placement_init: Placement, schedule, scenario: Scenario,
             params: ChannelParams, config: GdConfig = GdConfig()) -> GdResult:
    """Projected gradient ascent with Armijo backtracking.

    Moves along the projection arc x <- max(x + s*grad, 0), halving s until
    the sufficient-increase test passes. The trace is nondecreasing; stops
    when the projected gradient norm falls below grad_tol, when no step of
    any tried size improves, or at the iteration cap.
    """
    xy = project_nonneg(placement_init.xy)
    placement = Placement(xy)
    value = placement_objective(placement, schedule, scenario, params)
    trace = [value]
    converged = False
    reason = "max_iters"
    iterations = 0
    for _ in range(config.max_iters):
        grad = placement_gradient(placement, schedule, scenario, params,
                                  fd_step=config.fd_step)
        projected = np.where((xy <= 0.0) & (grad < 0.0), 0.0, grad)
        if float(np.linalg.norm(projected)) < config.grad_tol:
            converged = True
            reason = "grad_tol"
            break
        iterations += 1
        step = config.step_init
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            candidate_xy = project_nonneg(xy + step * grad)
            gain = float((grad * (candidate_xy - xy)).sum())
            candidate = Placement(candidate_xy)
            candidate_value = placement_objective(candidate, schedule, scenario, params)
            if candidate_value >= value + config.armijo_c * gain and gain > 0.0:
                xy = candidate_xy
                placement = candidate
                value = candidate_value
                trace.append(value)
                accepted = True
                break
            step *= config.backtrack
        if not accepted:
            reason = "line_search"
            break
    return GdResult(placement=placement, trace=tuple(trace), converged=converged,
                    reason=reason, iterations=iterations)
