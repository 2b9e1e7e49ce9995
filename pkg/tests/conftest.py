import numpy as np
import pytest

from airsched import ChannelParams, Placement, TrajectorySpec, circle_scenario
from airsched.channel import received_power_tensor
from airsched.optimizer import initial_placement
from airsched.scenario import random_instance


@pytest.fixture
def params():
    return ChannelParams()


@pytest.fixture
def circle4():
    return circle_scenario(TrajectorySpec(kind="circle", n_ugvs=4, t_slots=10))


@pytest.fixture
def small_world(params):
    """A seeded 3-UGV, 2-UAV, 4-slot world with powers at a fixed placement."""
    scenario = random_instance(42, n=3, m=2, t=4)
    placement = initial_placement(scenario, np.random.default_rng(42))
    pr = np.ascontiguousarray(received_power_tensor(placement, scenario, params))
    return scenario, placement, pr


def random_relaxed_schedule(n, m, t, rng):
    """Feasible relaxed tensor: uniform draw rescaled per slot."""
    a = rng.uniform(size=(n, m, t))
    for s in range(t):
        slot = a[:, :, s]
        scale = max(slot.sum(axis=1).max(), slot.sum(axis=0).max(), 1.0)
        slot /= scale
    return a
