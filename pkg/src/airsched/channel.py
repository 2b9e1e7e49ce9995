"""Probabilistic air-to-ground channel model.

Distances, elevation angles, LoS probability, expected path loss, received
power, interference and per-link spectral efficiency for a network of fixed
aerial relays (UAVs) serving moving ground vehicles (UGVs) over discrete
time slots. Everything here is a pure function of value inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

SPEED_OF_LIGHT = 299_792_458.0

# Elevation below which a line-of-sight link is not modeled (15 degrees).
LOS_MIN_ELEVATION = math.pi / 12.0


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, order="C")   # owned copy
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChannelParams:
    """Physical constants and environment parameters (all linear units)."""

    fc: float = 2e6              # carrier frequency, Hz
    g_t: float = 1.0             # transmit antenna gain
    g_r: float = 1.0             # receive antenna gain
    mu_los: float = 1.0          # LoS attenuation factor
    mu_nlos: float = 20.0        # NLoS attenuation factor, >= mu_los
    alpha_env: float = 0.6       # environment constant (LoS probability scale)
    gamma_env: float = 0.11      # environment constant (LoS probability exponent)
    n0: float = 1e-9             # noise power, W
    c: float = SPEED_OF_LIGHT    # speed of light, m/s

    def __post_init__(self):
        for name in ("fc", "g_t", "g_r", "mu_los", "mu_nlos", "alpha_env", "n0", "c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.gamma_env < 0:
            raise ValueError("gamma_env must be >= 0")
        if self.mu_nlos < self.mu_los:
            raise ValueError("mu_nlos must be >= mu_los")

    @property
    def free_space_factor(self) -> float:
        """Path-loss coefficient per squared meter: 4 pi^2 fc^2 / (c^2 G_t G_r)."""
        return 4.0 * math.pi**2 * self.fc**2 / (self.c**2 * self.g_t * self.g_r)


@dataclass(frozen=True)
class Scenario:
    """World description: UAV fleet constants and UGV trajectories.

    trajectories has shape (n, t_slots, 2): planar UGV positions per slot.
    slot_duration is carried for reporting only; it does not enter the
    objective (rates are per-Hz spectral efficiencies summed over slots).
    """

    m: int
    n: int
    t_slots: int
    heights: np.ndarray          # (m,) UAV altitudes, m
    tx_power: np.ndarray         # (n,) UGV transmit powers, W
    trajectories: np.ndarray     # (n, t_slots, 2) planar positions, m
    slot_duration: float = 1.0

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.t_slots < 1:
            raise ValueError("m, n and t_slots must all be >= 1")
        object.__setattr__(self, "heights", _readonly(np.broadcast_to(
            np.asarray(self.heights, dtype=np.float64), (self.m,)).copy()))
        object.__setattr__(self, "tx_power", _readonly(np.broadcast_to(
            np.asarray(self.tx_power, dtype=np.float64), (self.n,)).copy()))
        traj = np.asarray(self.trajectories, dtype=np.float64)
        if traj.shape != (self.n, self.t_slots, 2):
            raise ValueError(
                f"trajectories must have shape {(self.n, self.t_slots, 2)}, got {traj.shape}")
        object.__setattr__(self, "trajectories", _readonly(traj))
        if not np.all(self.heights > 0):
            raise ValueError("all heights must be > 0")
        if not np.all(self.tx_power > 0):
            raise ValueError("all tx_power must be > 0")
        if self.slot_duration <= 0:
            raise ValueError("slot_duration must be > 0")


@dataclass(frozen=True)
class Placement:
    """Planar UAV coordinates; heights live in the Scenario."""

    xy: np.ndarray               # (m, 2), each coordinate >= 0

    def __post_init__(self):
        xy = np.asarray(self.xy, dtype=np.float64)
        if xy.ndim != 2 or xy.shape[1] != 2:
            raise ValueError("xy must have shape (m, 2)")
        if not np.all(xy >= 0):
            raise ValueError("UAV coordinates must be nonnegative")
        object.__setattr__(self, "xy", _readonly(xy))


def _check_indices(scenario: Scenario, i: int, j: int, t: int) -> None:
    if not (0 <= i < scenario.n and 0 <= j < scenario.m and 0 <= t < scenario.t_slots):
        raise IndexError(f"link index out of range: i={i}, j={j}, t={t}")


def link_distance(placement: Placement, scenario: Scenario, i: int, j: int, t: int) -> float:
    """3-D distance between UGV i at slot t and UAV j."""
    _check_indices(scenario, i, j, t)
    dx = placement.xy[j, 0] - scenario.trajectories[i, t, 0]
    dy = placement.xy[j, 1] - scenario.trajectories[i, t, 1]
    return math.sqrt(dx * dx + dy * dy + scenario.heights[j] ** 2)


def elevation_angle(d: float, h: float) -> float:
    """Elevation angle arcsin(h/d) of a relay at height h seen from distance d."""
    if not 0 < h <= d:
        raise ValueError(f"invalid geometry: need 0 < h <= d, got h={h}, d={d}")
    return math.asin(h / d)


def los_probability(theta: float, params: ChannelParams) -> float:
    """Probability of a line-of-sight link at elevation theta (radians).

    Zero at or below 15 degrees; above that, the environment power law
    clipped to [0, 1].
    """
    if theta <= LOS_MIN_ELEVATION:
        return 0.0
    base = math.degrees(theta) - 15.0
    raw = params.alpha_env * base**params.gamma_env
    return min(max(raw, 0.0), 1.0)


def path_loss(d: float, params: ChannelParams, condition: str) -> float:
    """Linear path loss over distance d under 'los' or 'nlos' propagation."""
    if condition == "los":
        mu = params.mu_los
    elif condition == "nlos":
        mu = params.mu_nlos
    else:
        raise ValueError(f"condition must be 'los' or 'nlos', got {condition!r}")
    return params.free_space_factor * d * d * mu


def expected_path_loss(placement: Placement, scenario: Scenario, params: ChannelParams,
                       i: int, j: int, t: int) -> float:
    """LoS-probability mixture of the LoS and NLoS path losses for one link."""
    d = link_distance(placement, scenario, i, j, t)
    theta = elevation_angle(d, float(scenario.heights[j]))
    p = los_probability(theta, params)
    return p * path_loss(d, params, "los") + (1.0 - p) * path_loss(d, params, "nlos")


def received_power(placement: Placement, scenario: Scenario, params: ChannelParams,
                   i: int, j: int, t: int) -> float:
    """Mean received power of UGV i at UAV j in slot t."""
    return float(scenario.tx_power[i]) / expected_path_loss(placement, scenario, params, i, j, t)


def received_power_tensor(placement: Placement, scenario: Scenario,
                          params: ChannelParams) -> np.ndarray:
    """Received powers for every (UGV, UAV, slot) as an (n, m, t) tensor."""
    d2 = squared_distance_tensor(placement, scenario)
    d = np.sqrt(d2)
    h = scenario.heights[None, :, None]
    theta = np.arcsin(h / d)
    p = los_probability_tensor(theta, params)
    mu_eff = p * params.mu_los + (1.0 - p) * params.mu_nlos
    expected = params.free_space_factor * d2 * mu_eff
    return scenario.tx_power[:, None, None] / expected


def squared_distance_tensor(placement: Placement, scenario: Scenario) -> np.ndarray:
    """Squared 3-D link distances, shape (n, m, t)."""
    dx = placement.xy[None, :, 0, None] - scenario.trajectories[:, None, :, 0]
    dy = placement.xy[None, :, 1, None] - scenario.trajectories[:, None, :, 1]
    return dx * dx + dy * dy + (scenario.heights**2)[None, :, None]


def los_probability_tensor(theta: np.ndarray, params: ChannelParams) -> np.ndarray:
    """Vectorized los_probability."""
    base = np.degrees(theta) - 15.0
    raw = np.where(base > 0, params.alpha_env * np.power(np.maximum(base, 0.0),
                                                         params.gamma_env), 0.0)
    return np.clip(raw, 0.0, 1.0)


def interference(schedule, received_powers: np.ndarray, i: int, j: int, t: int) -> float:
    """Power received at UAV j in slot t from every transmitting UGV other than i."""
    a = np.asarray(schedule.a if hasattr(schedule, "a") else schedule, dtype=np.float64)
    active = a[:, :, t].sum(axis=1)
    powers = active * received_powers[:, j, t]
    return float(powers.sum() - powers[i])


def link_rate(schedule, placement: Placement, scenario: Scenario, params: ChannelParams,
              i: int, j: int, t: int) -> float:
    """Spectral efficiency of link (i, j) in slot t, bits/s/Hz."""
    _check_indices(scenario, i, j, t)
    pr = received_power_tensor(placement, scenario, params)
    a = np.asarray(schedule.a if hasattr(schedule, "a") else schedule, dtype=np.float64)
    inter = interference(schedule, pr, i, j, t)
    return math.log2(1.0 + a[i, j, t] * pr[i, j, t] / (inter + params.n0))


def rate_tensor(schedule, placement: Placement, scenario: Scenario,
                params: ChannelParams) -> np.ndarray:
    """Per-link spectral efficiencies for every (UGV, UAV, slot)."""
    a = np.ascontiguousarray(
        schedule.a if hasattr(schedule, "a") else schedule, dtype=np.float64)
    pr = np.ascontiguousarray(received_power_tensor(placement, scenario, params))
    return _kernels.rates(a, pr, params.n0)


def sum_rate(schedule, placement: Placement, scenario: Scenario,
             params: ChannelParams) -> float:
    """Total achievable rate: per-link spectral efficiencies summed over all slots."""
    return float(rate_tensor(schedule, placement, scenario, params).sum())
