import itertools
import math

import numpy as np
import pytest

from airsched import AlternatingConfig, ChannelParams, TrajectorySpec
from airsched.scenario import (baseline_fixed_selection, baseline_random_selection,
                               build_scenario, circle_scenario, custom_scenario,
                               line_scenario, random_instance)

pytestmark = pytest.mark.filterwarnings("ignore:active link near")


def segments_intersect(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def selected_pair(schedule):
    first = schedule.a[:, :, 0]
    return tuple(sorted(int(np.argmax(first[:, j]))
                        for j in range(first.shape[1]) if first[:, j].any()))


class TestLineScenario:
    def test_single_ugv_spacing(self):
        spec = TrajectorySpec(kind="line", n_ugvs=1, t_slots=10, length_m=450.0)
        scenario = line_scenario(spec)
        steps = np.diff(scenario.trajectories[0], axis=0)
        gaps = np.linalg.norm(steps, axis=1)
        np.testing.assert_allclose(gaps, 50.0, rtol=1e-12)
        total = np.linalg.norm(scenario.trajectories[0, -1] - scenario.trajectories[0, 0])
        assert total == pytest.approx(450.0, rel=1e-12)

    def test_default_four_segments_pairwise_intersect(self):
        spec = TrajectorySpec(kind="line", n_ugvs=4, t_slots=2)
        scenario = line_scenario(spec)
        ends = [(scenario.trajectories[k, 0], scenario.trajectories[k, -1])
                for k in range(4)]
        for (a1, a2), (b1, b2) in itertools.combinations(ends, 2):
            assert segments_intersect(a1, a2, b1, b2)

    def test_nonnegative_coordinates(self):
        scenario = line_scenario(TrajectorySpec(kind="line", n_ugvs=4, t_slots=10))
        assert (scenario.trajectories >= 0).all()

    def test_anchor_override(self):
        spec = TrajectorySpec(kind="line", n_ugvs=1, t_slots=3,
                              geometry_params={"anchors": [[[0.0, 0.0], [100.0, 0.0]]]})
        scenario = line_scenario(spec)
        np.testing.assert_allclose(scenario.trajectories[0],
                                   [[0.0, 0.0], [50.0, 0.0], [100.0, 0.0]])

    def test_kind_mismatch(self):
        with pytest.raises(ValueError):
            line_scenario(TrajectorySpec(kind="circle"))


class TestCircleScenario:
    def test_quarter_positions(self):
        spec = TrajectorySpec(kind="circle", n_ugvs=1, t_slots=4, radius_m=200.0)
        scenario = circle_scenario(spec)
        expected = np.array([[500.0, 300.0], [300.0, 500.0],
                             [100.0, 300.0], [300.0, 100.0]])
        np.testing.assert_allclose(scenario.trajectories[0], expected, atol=1e-9)

    def test_adjacent_circles_overlap(self):
        spec = TrajectorySpec(kind="circle", n_ugvs=4, t_slots=8)
        scenario = circle_scenario(spec)
        # Center spacing 300 against radius 200: interiors overlap by 100 m.
        for k in range(3):
            c_a = scenario.trajectories[k].mean(axis=0)
            c_b = scenario.trajectories[k + 1].mean(axis=0)
            spacing = np.linalg.norm(c_b - c_a)
            assert spacing == pytest.approx(300.0, abs=1e-6)
            assert spacing < 2 * spec.radius_m

    def test_nonnegative_for_many_ugvs(self):
        scenario = circle_scenario(TrajectorySpec(kind="circle", n_ugvs=6, t_slots=10))
        assert (scenario.trajectories >= 0).all()
        assert scenario.n == 6

    def test_phase_override(self):
        spec = TrajectorySpec(kind="circle", n_ugvs=1, t_slots=4,
                              geometry_params={"phases": [math.pi / 2]})
        scenario = circle_scenario(spec)
        np.testing.assert_allclose(scenario.trajectories[0, 0], [300.0, 500.0], atol=1e-9)


class TestCustomAndDispatch:
    def test_custom_pass_through(self):
        traj = np.arange(12, dtype=float).reshape(2, 3, 2)
        spec = TrajectorySpec(kind="custom", n_ugvs=2, t_slots=3,
                              geometry_params={"trajectories": traj.tolist()})
        scenario = custom_scenario(spec)
        np.testing.assert_array_equal(scenario.trajectories, traj)

    def test_custom_requires_trajectories(self):
        with pytest.raises(ValueError):
            TrajectorySpec(kind="custom", n_ugvs=2, t_slots=3)

    def test_build_dispatch(self):
        assert build_scenario(TrajectorySpec(kind="circle")).n == 4
        assert build_scenario(TrajectorySpec(kind="line")).n == 4


class TestFixedSelection:
    def test_two_ugvs_only_pair(self, params):
        scenario = random_instance(1, n=2, m=2, t=2)
        schedule, placement = baseline_fixed_selection(scenario, params)
        assert selected_pair(schedule) == (0, 1)
        schedule.validate_binary()
        assert (placement.xy >= 0).all()

    def test_collinear_extremes_chosen(self, params):
        traj = np.array([[[0.0, 0.0]], [[100.0, 0.0]], [[500.0, 0.0]]])
        spec = TrajectorySpec(kind="custom", n_ugvs=3, t_slots=1,
                              geometry_params={"trajectories": traj.tolist()})
        scenario = custom_scenario(spec)
        schedule, _ = baseline_fixed_selection(scenario, params)
        assert selected_pair(schedule) == (0, 2)

    def test_circle_outermost_pair(self, params):
        scenario = circle_scenario(TrajectorySpec(kind="circle", n_ugvs=4, t_slots=10))
        schedule, _ = baseline_fixed_selection(scenario, params)
        # Summed pairwise distance is maximized by the outermost circles.
        best = None
        for p in range(4):
            for q in range(p + 1, 4):
                sep = float(np.linalg.norm(
                    scenario.trajectories[p] - scenario.trajectories[q], axis=1).sum())
                if best is None or sep > best[0]:
                    best = (sep, (p, q))
        assert selected_pair(schedule) == best[1]
        assert best[1] == (0, 3)

    def test_permutation_equivariance(self, params):
        rng = np.random.default_rng(5)
        traj = rng.uniform(0, 500, size=(4, 3, 2))
        spec = TrajectorySpec(kind="custom", n_ugvs=4, t_slots=3,
                              geometry_params={"trajectories": traj.tolist()})
        schedule, _ = baseline_fixed_selection(custom_scenario(spec), params)
        base_pair = selected_pair(schedule)

        perm = [2, 0, 3, 1]
        traj_p = traj[perm]
        spec_p = TrajectorySpec(kind="custom", n_ugvs=4, t_slots=3,
                                geometry_params={"trajectories": traj_p.tolist()})
        schedule_p, _ = baseline_fixed_selection(custom_scenario(spec_p), params)
        mapped = tuple(sorted(perm.index(i) for i in base_pair))
        assert selected_pair(schedule_p) == mapped

    def test_single_ugv_rejected(self, params):
        scenario = random_instance(2, n=1, m=2, t=2)
        with pytest.raises(ValueError):
            baseline_fixed_selection(scenario, params)

    def test_extra_uavs_idle(self, params):
        scenario = random_instance(3, n=3, m=3, t=2)
        schedule, _ = baseline_fixed_selection(scenario, params)
        assert schedule.a[:, 2, :].sum() == 0.0

    def test_single_uav_schedules_first_selection_only(self, params):
        scenario = random_instance(8, n=3, m=1, t=2)
        schedule, _ = baseline_fixed_selection(scenario, params)
        schedule.validate_binary()
        assert schedule.a.sum(axis=(0, 1)).max() == 1.0

    def test_max_metric_option(self, params):
        scenario = random_instance(4, n=3, m=2, t=3)
        schedule, _ = baseline_fixed_selection(scenario, params, pair_metric="max")
        schedule.validate_binary()
        with pytest.raises(ValueError):
            baseline_fixed_selection(scenario, params, pair_metric="median")


class TestRandomSelection:
    def test_deterministic_per_seed(self, params):
        scenario = random_instance(5, n=4, m=2, t=2)
        s1, p1 = baseline_random_selection(scenario, params, seed=11)
        s2, p2 = baseline_random_selection(scenario, params, seed=11)
        np.testing.assert_array_equal(s1.a, s2.a)
        np.testing.assert_array_equal(p1.xy, p2.xy)

    def test_pair_frequencies_uniform(self, params):
        # Pair choice only; heavy placement optimization skipped by reusing
        # the selection logic through many seeds.
        counts = {}
        for seed in range(1000):
            rng = np.random.default_rng(seed)
            p, q = sorted(rng.choice(4, size=2, replace=False).tolist())
            counts[(p, q)] = counts.get((p, q), 0) + 1
        assert len(counts) == 6
        for pair, count in counts.items():
            assert abs(count / 1000 - 1 / 6) < 0.05

        # The baseline draws its pair with exactly this recipe.
        scenario = random_instance(6, n=4, m=2, t=1)
        for seed in (0, 17, 393):
            rng = np.random.default_rng(seed)
            expected = tuple(sorted(rng.choice(4, size=2, replace=False).tolist()))
            schedule, _ = baseline_random_selection(scenario, params, seed=seed)
            assert selected_pair(schedule) == expected

    def test_binary_feasible(self, params):
        scenario = random_instance(7, n=5, m=2, t=3)
        schedule, _ = baseline_random_selection(scenario, params, seed=3)
        schedule.validate_binary()
        for s in range(3):
            assert schedule.a[:, :, s].sum() == 2.0


class TestRandomInstance:
    def test_reproducible(self):
        a = random_instance(10, n=3, m=2, t=4)
        b = random_instance(10, n=3, m=2, t=4)
        np.testing.assert_array_equal(a.trajectories, b.trajectories)

    def test_inside_arena(self):
        scenario = random_instance(11, n=4, m=2, t=6, arena_m=500.0)
        assert (scenario.trajectories >= 0).all()
        assert (scenario.trajectories <= 500.0).all()

    def test_bounded_steps(self):
        scenario = random_instance(12, n=3, m=1, t=8, arena_m=600.0)
        steps = np.diff(scenario.trajectories, axis=1)
        assert np.abs(steps).max() <= 600.0 / (2 * 8) + 1e-12

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            random_instance(0, n=0, m=1, t=1)
