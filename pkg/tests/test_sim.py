import math

import numpy as np
import pytest

from navlite.core.config import config
from navlite.core.errors import NoFeasibleControl, ParseError, UnknownId
from navlite.eval.experiments import drift_experiment
from navlite.eval.harness import PolicySpec, run_trials
from navlite.eval.metrics import success_rate, trial_from_log
from navlite.intention.dlm import DLM
from navlite.mapsys.types import Pose2D
from navlite.sim.camera import PROP, cast_rays, render_observation
from navlite.sim.episode import (
    ExpertPolicy,
    PathTrackerPolicy,
    collect_demonstrations,
    intervene,
    policy_mode,
    run_episode,
)
from navlite.sim.expert import scripted_expert
from navlite.sim.fixtures import (
    TASKS,
    adversarial_scenario,
    blind_spot_scenario,
    corridor_map,
    corridor_scenario,
    fixture_scenario,
    l_corridor_scenario,
)
from navlite.sim.odometry import (
    OdometryDelta,
    OdometryModel,
    integrate_odometry,
    odometry_read,
    position_error,
    re_anchor,
)
from navlite.sim.scenario import load_scenario, save_scenario
from navlite.sim.trajlog import TickRow, TrajectoryLog
from navlite.sim.world import Prop, RobotState, World, step_world

from .conftest import make_exit


def robot_at(x, y, heading=0.0, frame="corridor"):
    return RobotState(pose=Pose2D(frame=frame, x=x, y=y, heading=heading))


class TestOdometry:

    def test_noise_free_is_exact(self, rng):
        delta = OdometryDelta(0.3, 0.1)
        assert odometry_read(OdometryModel(), delta, rng) == delta

    def test_variance_grows_with_distance(self, rng):
        model = OdometryModel(sigma_t=0.1)
        reads = np.array([odometry_read(model, OdometryDelta(4.0, 0.0), rng) for _ in range(4000)])
        # var = sigma_t^2 * |trans|
        assert reads[:, 0].std() == pytest.approx(0.1 * 2.0, rel=0.1)
        assert reads[:, 0].mean() == pytest.approx(4.0, abs=0.02)

    def test_integrate(self):
        pose = integrate_odometry(Pose2D(frame="f", x=0, y=0), OdometryDelta(1.0, 0.0))
        assert (pose.x, pose.y) == pytest.approx((1.0, 0.0))

    def test_re_anchor(self):
        exit = make_exit("e", "f", (30, 40))
        drifted = Pose2D(frame="f", x=2.5, y=4.4, heading=0.7)
        anchored = re_anchor(drifted, exit, detected=True)
        assert (anchored.x, anchored.y, anchored.heading) == (3.0, 4.0, 0.7)
        assert re_anchor(drifted, exit, detected=False) is drifted
        assert position_error(anchored, Pose2D(frame="f", x=3.0, y=4.0)) == 0.0


class TestWorld:

    def test_step_moves_forward(self):
        world = World(corridor_map())
        world, robot, events = step_world(world, robot_at(2.0, 1.7), (1.0, 0.0))
        assert robot.pose.x == pytest.approx(2.0 + config.sim.v_max * config.sim.dt)
        assert events == [] and world.tick == 1

    def test_never_enters_occupied_cells(self):
        world = World(corridor_map())
        robot = robot_at(2.0, 0.55, heading=-math.pi / 2)
        _, moved, events = step_world(world, robot, (1.0, 0.0))
        assert [e.kind.value for e in events] == ["collision"]
        cell = world.grid("corridor").metric_to_cell(moved.pose.xy)
        assert world.grid("corridor").is_free(cell)

    def test_invalid_dt(self):
        with pytest.raises(ValueError):
            step_world(World(corridor_map()), robot_at(2.0, 1.7), (0.0, 0.0), dt=0.0)

    def test_unknown_frame(self):
        with pytest.raises(UnknownId):
            World(corridor_map()).grid("f9")


class TestCamera:

    def _center_ray(self, prop):
        world = World(corridor_map(), props=[prop])
        return cast_rays(world, robot_at(2.0, 1.7), config.sim.camera, rays=3)

    def test_low_prop_hidden_in_blind_cone(self):
        _, kinds = self._center_ray(Prop(frame="corridor", x=2.4, y=1.7))
        assert kinds[1] != 2
        dist, kinds = self._center_ray(Prop(frame="corridor", x=3.5, y=1.7))
        assert kinds[1] == 2 and dist[1] == pytest.approx(1.4, abs=0.06)

    def test_tall_prop_always_visible(self):
        _, kinds = self._center_ray(Prop(frame="corridor", x=2.4, y=1.7, low=False))
        assert kinds[1] == 2

    def test_observation_raster(self):
        world = World(corridor_map(), props=[Prop(frame="corridor", x=3.5, y=1.7)])
        obs = render_observation(world, robot_at(2.0, 1.7))
        assert obs.pixels.shape == (obs.side, obs.side) and obs.pixels.dtype == np.uint8
        assert np.any(obs.pixels == PROP)
        assert obs.as_input(3).shape == (3, obs.side, obs.side)

    def test_deterministic(self):
        world = World(corridor_map())
        a = render_observation(world, robot_at(5.0, 1.2, heading=0.3))
        b = render_observation(world, robot_at(5.0, 1.2, heading=0.3))
        assert np.array_equal(a.pixels, b.pixels)


class TestScenario:

    def test_steps(self):
        assert blind_spot_scenario().steps == 5
        assert adversarial_scenario().steps == 15
        assert corridor_scenario().steps == 1

    def test_roundtrip(self, tmp_path):
        path = save_scenario(blind_spot_scenario(), tmp_path / "blind.json")
        assert load_scenario(path) == blind_spot_scenario()

    def test_invalid(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"name": "x", "map": "fixture:corridor", "goals": []}')
        with pytest.raises(ParseError):
            load_scenario(path)

    def test_unknown_fixture(self):
        with pytest.raises(UnknownId):
            fixture_scenario("moon")


class TestIntervention:

    def test_snaps_ahead_on_path(self):
        world = World(corridor_map())
        path = [(x / 10.0, 1.7) for x in range(10, 200)]
        moved = intervene(world, robot_at(5.0, 0.6), path)
        assert moved.pose.y == 1.7
        assert 5.0 < moved.pose.x <= 5.3 + 1e-9
        assert moved.pose.heading == pytest.approx(0.0)
        assert moved.v == 0.0

    def test_skips_blocked_points(self):
        world = World(corridor_map(), props=[Prop(frame="corridor", x=5.0, y=1.7, size=0.4)])
        path = [(x / 10.0, 1.7) for x in range(10, 200)]
        moved = intervene(world, robot_at(4.8, 1.7), path)
        assert world.clearance("corridor", [moved.pose.xy])[0] >= config.sim.safe_distance

    def test_empty_path_stops(self):
        robot = robot_at(3.0, 1.7, heading=1.0)
        assert intervene(World(corridor_map()), robot, []).pose == robot.pose


class TestExpert:

    _route = [(x / 10.0, 1.7) for x in range(20, 200)]

    def test_straight_path(self):
        v, theta = scripted_expert(World(corridor_map()), self._route, robot_at(2.0, 1.7))
        assert abs(theta) < 0.05
        assert v >= 0.9

    def test_blocked_corridor(self):
        # caixa maior que a largura do corredor
        wall = Prop(frame="corridor", x=5.0, y=1.7, size=3.0)
        with pytest.raises(NoFeasibleControl):
            scripted_expert(World(corridor_map(), props=[wall]), self._route, robot_at(2.0, 1.7))


class TestEpisode:

    def test_expert_corridor(self):
        log = run_episode(ExpertPolicy(), corridor_scenario(), seed=0)
        assert log.goal_reached and log.steps == [True]
        assert log.interventions == 0
        assert log.rows[-1].x == pytest.approx(20.0, abs=config.sim.goal_tolerance)

    def test_repeatable(self):
        noisy = l_corridor_scenario().model_copy(update={"odometry": OdometryModel(sigma_t=0.05)})
        a = run_episode(ExpertPolicy(), noisy, seed=7)
        b = run_episode(ExpertPolicy(), noisy, seed=7)
        c = run_episode(ExpertPolicy(), noisy, seed=8)
        assert a.model_dump() == b.model_dump()
        assert [r.est_x for r in a.rows] != [r.est_x for r in c.rows]

    def test_intentions_follow_route(self):
        log = run_episode(ExpertPolicy(), l_corridor_scenario(), seed=0)
        seen = [r.intention for r in log.rows]
        assert seen[0] == DLM.GO_FORWARD.value
        assert DLM.TURN_LEFT.value in seen
        assert DLM.TURN_RIGHT.value not in seen

    def test_stop_never_reaches_policy(self):
        assert policy_mode(DLM.STOP) == DLM.GO_FORWARD
        assert policy_mode(DLM.TURN_LEFT) == DLM.TURN_LEFT

    def test_terminate_rule(self):
        scenario = blind_spot_scenario().model_copy(update={"intervention_rule": "terminate"})
        log = run_episode(PathTrackerPolicy(), scenario, seed=0)
        assert log.interventions == 1
        assert not log.goal_reached and len(log.steps) == 5 and not all(log.steps)

    def test_collect_demonstrations(self):
        data = collect_demonstrations([corridor_scenario()], seeds=[0, 1])
        assert len(data.sequences) == 2
        assert set(data.modes) <= {DLM.GO_FORWARD, DLM.TURN_LEFT, DLM.TURN_RIGHT}
        assert data.side == config.sim.camera.side


class TestTrajectoryLog:

    def test_save_load(self, tmp_path):
        log = run_episode(ExpertPolicy(), corridor_scenario(), seed=3)
        csv_path, _ = log.save(tmp_path)
        assert csv_path.name == "corridor_expert_3.csv"
        assert TrajectoryLog.load(csv_path).model_dump() == log.model_dump()

    def test_bytes_repeat(self, tmp_path):
        for d in ("a", "b"):
            run_episode(ExpertPolicy(), corridor_scenario(), seed=1).save(tmp_path / d, "run")
        for suffix in (".csv", ".json"):
            assert (tmp_path / "a" / f"run{suffix}").read_bytes() == \
                (tmp_path / "b" / f"run{suffix}").read_bytes()

    def test_motion_segments_break_on_jumps(self):
        def row(tick, frame, x, events=()):
            return TickRow(tick=tick, t=tick * 0.1, frame=frame, x=x, y=0.0, heading=0.0,
                           est_frame=frame, est_x=x, est_y=0.0, est_heading=0.0, v=0.0, theta=0.0,
                           intention="GoForward", events=list(events))

        log = TrajectoryLog(scenario="s", policy="p", seed=0, dt=0.1, rows=[
            row(0, "a", 0.0), row(1, "a", 0.1), row(2, "a", 3.0, ["intervention:1"]),
            row(3, "a", 3.1), row(4, "b", 0.0), row(5, "b", 0.1),
        ])
        assert [len(s) for s in log.motion_segments()] == [2, 2, 2]
        assert log.events("intervention") == [(2, "intervention:1")]

    def test_missing_summary(self, tmp_path):
        (tmp_path / "x.csv").write_text("tick\n")
        with pytest.raises(ParseError):
            TrajectoryLog.load(tmp_path / "x.csv")


@pytest.mark.slow
class TestClosedLoop:

    @pytest.mark.parametrize("task", TASKS)
    def test_expert_solves_tasks(self, task):
        logs = run_trials(fixture_scenario(task), PolicySpec(kind="expert"), seeds=range(3))
        assert success_rate([trial_from_log(log) for log in logs]) == 1.0
        assert all(log.interventions == 0 for log in logs)

    def test_path_tracker_hits_maze_props(self):
        logs = run_trials(fixture_scenario("task_e"), PolicySpec(kind="path_tracker"), seeds=[0])
        assert logs[0].interventions >= 1

    def test_adversary_blocks(self):
        log = run_episode(ExpertPolicy(), adversarial_scenario(), seed=0)
        assert len(log.steps) == 15
        assert len(log.events("block")) <= 15

    def test_anchoring_cancels_drift(self):
        result = drift_experiment(seeds=range(5), sigma_t=0.05, anchoring=True)
        assert all(n == 3 for n in result.exits_detected)
        assert result.error_after_anchor == 0.0

    def test_drift_without_anchoring(self):
        result = drift_experiment(seeds=range(50), sigma_t=0.05, anchoring=False)
        assert all(n == 0 for n in result.exits_detected)
        assert result.exceed_fraction >= 0.8
