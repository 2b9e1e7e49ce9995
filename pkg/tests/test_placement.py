import math
import warnings

import numpy as np
import pytest

import oracles
from airsched import ChannelParams, Placement, Scenario
from airsched.placement import (GdConfig, gd_solve, placement_gradient,
                                placement_objective, project_nonneg)
from airsched.channel import sum_rate
from airsched.scenario import random_instance
from airsched.scheduler import Schedule, greedy_power_schedule
from airsched.channel import received_power_tensor


def static_scenario(ugv_positions, m=1, height=200.0, t=1):
    traj = np.repeat(np.asarray(ugv_positions, dtype=float)[:, None, :], t, axis=1)
    return Scenario(m=m, n=len(ugv_positions), t_slots=t, heights=np.full(m, height),
                    tx_power=np.ones(len(ugv_positions)), trajectories=traj)


def random_setup(seed, n=3, m=2, t=3, binary=True):
    scenario = random_instance(seed, n=n, m=m, t=t)
    rng = np.random.default_rng(seed + 1)
    xy = rng.uniform(50.0, 550.0, size=(m, 2))
    if binary:
        pr = received_power_tensor(Placement(xy), scenario, ChannelParams())
        schedule = greedy_power_schedule(np.ascontiguousarray(pr))
    else:
        a = rng.uniform(size=(n, m, t))
        for s in range(t):
            slot = a[:, :, s]
            slot /= max(slot.sum(axis=0).max(), slot.sum(axis=1).max(), 1.0)
        schedule = Schedule(a)
    return scenario, Placement(xy), schedule


def away_from_kinks(scenario, xy, params, margin=2.0):
    """True when no UGV sits near a nonsmooth radius of any UAV."""
    for j in range(len(xy)):
        h = scenario.heights[j]
        radii = [h / math.tan(math.pi / 12.0)]
        gaps = np.linalg.norm(scenario.trajectories - np.asarray(xy[j]), axis=2)
        for radius in radii:
            if np.any(np.abs(gaps - radius) < margin):
                return False
    return True


class TestObjective:
    def test_zero_schedule_zero_objective(self, params):
        sc = static_scenario([(100.0, 100.0)], t=3)
        place = Placement([[50.0, 60.0]])
        assert placement_objective(place, Schedule.zeros(1, 1, 3), sc, params) == 0.0

    def test_matches_sum_rate_exactly(self, params):
        scenario, place, schedule = random_setup(3)
        assert placement_objective(place, schedule, scenario, params) == \
            sum_rate(schedule, place, scenario, params)

    def test_improves_toward_overhead(self, params):
        sc = static_scenario([(300.0, 300.0)])
        schedule = Schedule(np.ones((1, 1, 1)))
        values = [placement_objective(Placement([[x, 300.0]]), schedule, sc, params)
                  for x in (2800.0, 2000.0, 1200.0, 600.0, 300.0)]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestProjection:
    def test_clips_negative(self):
        np.testing.assert_array_equal(project_nonneg(np.array([5.0, -3.0])),
                                      np.array([5.0, 0.0]))

    def test_identity_on_nonnegative(self):
        x = np.array([[1.0, 0.0], [2.5, 3.0]])
        np.testing.assert_array_equal(project_nonneg(x), x)

    def test_mixed(self):
        np.testing.assert_array_equal(project_nonneg(np.array([-1.0, -1.0, 2.0, 0.0])),
                                      np.array([0.0, 0.0, 2.0, 0.0]))


class TestGradient:
    def test_zero_schedule_zero_gradient(self, params):
        scenario, place, _ = random_setup(5)
        grad = placement_gradient(place, Schedule.zeros(3, 2, 3), scenario, params)
        np.testing.assert_array_equal(grad, np.zeros((2, 2)))

    def test_symmetric_geometry_zero_x_gradient(self, params):
        # One UAV midway between two identical static UGVs, serving them in
        # alternating slots: mirror symmetry in x forces a zero x-gradient.
        sc = static_scenario([(100.0, 300.0), (500.0, 300.0)], m=1, t=2)
        a = np.zeros((2, 1, 2))
        a[0, 0, 0] = 1.0
        a[1, 0, 1] = 1.0
        place = Placement([[300.0, 300.0]])
        grad = placement_gradient(place, Schedule(a), sc, params)
        assert abs(grad[0, 0]) < 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_central_differences(self, params, seed):
        scenario, place, schedule = random_setup(seed, binary=(seed % 2 == 0))
        if not away_from_kinks(scenario, place.xy, params):
            pytest.skip("sampled geometry too close to the elevation kink")
        grad = placement_gradient(place, schedule, scenario, params)

        def objective(xy):
            return oracles.sum_rate(schedule.a.tolist(), xy,
                                    scenario.heights.tolist(),
                                    scenario.trajectories.tolist(),
                                    scenario.tx_power.tolist(), params)

        fd = np.asarray(oracles.central_difference_gradient(objective, place.xy.tolist(), 0.1))
        # 1e-7 additive allowance for the oracle's own O(h^2) truncation noise.
        assert (np.abs(grad - fd) <= 1e-4 * np.abs(fd) + 1e-7).all()
        assert np.linalg.norm(grad - fd) < 1e-4 * max(np.linalg.norm(fd), 1e-12)

    def test_kink_triggers_fd_fallback_warning(self, params):
        h = 200.0
        kink_radius = h / math.tan(math.pi / 12.0)
        sc = static_scenario([(300.0 + kink_radius + 0.03, 300.0)], height=h)
        place = Placement([[300.0, 300.0]])
        schedule = Schedule(np.ones((1, 1, 1)))
        with pytest.warns(UserWarning, match="kink"):
            grad = placement_gradient(place, schedule, sc, params, fd_step=0.1)
        assert np.isfinite(grad).all()


class TestGdSolve:
    def test_stationary_start_terminates_immediately(self, params):
        # Mirror symmetry in both axes at the midpoint of two alternating
        # UGVs: the gradient vanishes and no step is taken.
        sc = static_scenario([(100.0, 300.0), (500.0, 300.0)], m=1, t=2)
        a = np.zeros((2, 1, 2))
        a[0, 0, 0] = 1.0
        a[1, 0, 1] = 1.0
        place = Placement([[300.0, 300.0]])
        grad = placement_gradient(place, Schedule(a), sc, params)
        assert np.linalg.norm(grad) < 1e-4
        result = gd_solve(place, Schedule(a), sc, params)
        assert result.converged and result.iterations == 0
        np.testing.assert_array_equal(result.placement.xy, place.xy)

    def test_single_link_converges_overhead(self, params):
        sc = static_scenario([(100.0, 100.0)], t=3)
        schedule = Schedule(np.ones((1, 1, 3)))
        start = Placement([[400.0, 250.0]])
        result = gd_solve(start, schedule, sc, params, GdConfig(max_iters=300))

        # Dense grid oracle at 1 m resolution around the UGV.
        best = None
        for x in range(90, 111):
            for y in range(90, 111):
                val = oracles.sum_rate(schedule.a.tolist(), [[float(x), float(y)]],
                                       [200.0], sc.trajectories.tolist(), [1.0], params)
                if best is None or val > best[0]:
                    best = (val, x, y)
        assert (best[1], best[2]) == (100, 100)
        assert np.linalg.norm(result.placement.xy[0] - np.array([100.0, 100.0])) < 1.0
        assert result.trace[-1] >= best[0] - 1e-3

    def test_trace_nondecreasing_and_feasible(self, params):
        for seed in range(4):
            scenario, place, schedule = random_setup(seed + 10)
            result = gd_solve(place, schedule, scenario, params)
            for lo, hi in zip(result.trace, result.trace[1:]):
                assert hi >= lo - 1e-12
            assert (result.placement.xy >= 0).all()

    def test_respects_nonnegativity_from_boundary(self, params):
        sc = static_scenario([(5.0, 5.0)])
        schedule = Schedule(np.ones((1, 1, 1)))
        result = gd_solve(Placement([[0.0, 0.0]]), schedule, sc, params)
        assert (result.placement.xy >= 0).all()

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GdConfig(backtrack=1.5)
        with pytest.raises(ValueError):
            GdConfig(step_init=0.0)
