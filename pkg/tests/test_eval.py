import json

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
from pydantic import ValidationError

from navlite.core.config import NavLiteConfig
from navlite.core.errors import EmptyTrials, MismatchedScenarios, ParseError, TooShort
from navlite.decision.train import desk_train_config
from navlite.eval.experiments import blind_spot_experiment, train_policy_net
from navlite.eval.harness import PolicySpec, build_policy, run_grid, save_logs
from navlite.eval.metrics import (
    MetricsReport,
    TrialRecord,
    completion_rate,
    log_smoothness,
    smoothness,
    success_rate,
    trial_from_log,
)
from navlite.eval.reports import (
    MISSING,
    ablation_report,
    config_hash,
    experiment_summary,
    task_report,
    write_summary,
)
from navlite.sim.episode import ExpertPolicy, PathTrackerPolicy, collect_demonstrations
from navlite.sim.fixtures import blind_spot_scenario, corridor_scenario
from navlite.sim.trajlog import TickRow, TrajectoryLog


def trials(*pairs):
    return [TrialRecord(s=s, n=n) for s, n in pairs]


def fake_log(steps, interventions=0, ticks=10, forward_calls=0, wall=0.0, seed=0):
    rows = [
        TickRow(tick=k, t=k * 0.1, frame="f", x=0.1 * k, y=0.0, heading=0.0, est_frame="f",
                est_x=0.1 * k, est_y=0.0, est_heading=0.0, v=1.0, theta=0.0,
                intention="GoForward")
        for k in range(ticks)
    ]
    return TrajectoryLog(scenario="t", policy="p", seed=seed, dt=0.1, rows=rows, steps=steps,
                         interventions=interventions, goal_reached=all(steps),
                         forward_calls=forward_calls, wall_seconds=wall)


class TestRates:

    @pytest.mark.parametrize("pairs, sr, cr", [
        ([(4, 4), (2, 4)], 0.5, 0.75),
        ([(1, 1)], 1.0, 1.0),
        ([(0, 5), (0, 5), (0, 5)], 0.0, 0.0),
        ([(3, 3), (3, 3), (1, 3), (0, 3)], 0.5, 7 / 12),
        ([(5, 5), (4, 5), (5, 5), (2, 5), (0, 5)], 0.4, 0.64),
    ])
    def test_hand_evaluated(self, pairs, sr, cr):
        assert success_rate(trials(*pairs)) == sr
        assert completion_rate(trials(*pairs)) == pytest.approx(cr, abs=1e-15)

    def test_empty(self):
        with pytest.raises(EmptyTrials):
            success_rate([])
        with pytest.raises(EmptyTrials):
            completion_rate([])

    def test_bounds(self):
        with pytest.raises(ValidationError):
            TrialRecord(s=3, n=2)
        with pytest.raises(ValidationError):
            TrialRecord(s=0, n=0)

    @settings(max_examples=1000, deadline=None)
    @given(st.lists(st.integers(min_value=1, max_value=20).flatmap(
        lambda n: st.tuples(st.integers(min_value=0, max_value=n), st.just(n))),
        min_size=1, max_size=30))
    def test_completion_bounds_success(self, pairs):
        assert completion_rate(trials(*pairs)) >= success_rate(trials(*pairs))


class TestSmoothness:

    def test_constant_velocity(self):
        t = np.arange(50) * 0.1
        assert smoothness(np.stack([1.5 * t, -0.5 * t], axis=1), 0.1) <= 1e-9

    def test_cubic(self):
        t = np.arange(101) * 0.01
        assert smoothness(t**3, 0.01) == pytest.approx(6.0, abs=1e-3)

    def test_constant_acceleration(self):
        t = np.arange(60) * 0.1
        assert smoothness(np.stack([0.3 * t**2, 2.0 - t**2], axis=1), 0.1) <= 1e-6

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31))
    def test_translation_and_reversal(self, seed):
        rng = np.random.default_rng(seed)
        track = np.cumsum(rng.normal(scale=0.05, size=(int(rng.integers(4, 80)), 2)), axis=0)
        base = smoothness(track, 0.1)
        shift = rng.uniform(-100, 100, size=2)
        assert smoothness(track + shift, 0.1) == pytest.approx(base, rel=1e-6, abs=1e-6)
        assert smoothness(track[::-1], 0.1) == pytest.approx(base, rel=1e-9, abs=1e-9)

    def test_too_short(self):
        with pytest.raises(TooShort):
            smoothness([(0, 0), (1, 1), (2, 2)], 0.1)

    def test_log_smoothness_skips_short_segments(self):
        log = fake_log([True], ticks=3)
        assert log_smoothness(log) is None
        assert log_smoothness(fake_log([True], ticks=20)) == pytest.approx(0.0, abs=1e-6)


class TestMetricsReport:

    def test_from_logs(self):
        logs = [fake_log([True, True], interventions=0), fake_log([True, False], interventions=2)]
        report = MetricsReport.from_logs("t", "m", logs)
        assert (report.sr, report.avg_int, report.interventions) == (0.5, 0.75, 1.0)
        assert report.time_s == pytest.approx(1.0)
        assert report.throughput is None

    def test_throughput(self):
        report = MetricsReport.from_logs("t", "m", [fake_log([True], forward_calls=50, wall=2.0)])
        assert report.throughput == 25.0

    def test_trial_from_log(self):
        assert trial_from_log(fake_log([True, False, True])) == TrialRecord(s=2, n=3)


class TestReports:

    def test_unfinished_time_is_missing(self):
        runs = {"m": {"t": [fake_log([False])]}}
        row = task_report(runs).rows[0]
        assert row[:3] == ["t", "m", "0.0"]
        assert row[4] == MISSING and row[5] == MISSING

    def test_absent_method_row(self):
        runs = {"a": {"t": [fake_log([True])]}, "b": {"t": None}}
        table = task_report(runs)
        assert table.rows[1] == ["t", "b"] + [MISSING] * 4
        assert table.reports[1] is None

    def test_mismatched_tasks(self):
        with pytest.raises(MismatchedScenarios):
            task_report({"a": {"t1": [fake_log([True])]}, "b": {"t2": [fake_log([True])]}})

    def test_csv_excludes_throughput(self, tmp_path):
        runs = {"m": {"t": [fake_log([True], forward_calls=10, wall=1.0)]}}
        table = ablation_report(runs, throughput=True)
        text, csv_path = table.write(tmp_path, "ablation")
        assert "Throughput" in text.read_text()
        assert csv_path.read_text().splitlines()[0] == "Task,Method,SR,Avg.Int."

    def test_summary(self, tmp_path):
        runs = {"m": {"t": [fake_log([True], forward_calls=10, wall=1.0)]}}
        cfg = NavLiteConfig()
        summary = experiment_summary("x", [task_report(runs)], [0, 1], cfg)
        assert summary["config_hash"] == config_hash(NavLiteConfig())
        assert "throughput" not in summary["tables"][0]["rows"][0]
        path = write_summary(summary, tmp_path / "summary.json")
        assert json.loads(path.read_text())["seeds"] == [0, 1]


class TestHarness:

    def test_build_policy(self):
        assert isinstance(build_policy(PolicySpec()), ExpertPolicy)
        assert isinstance(build_policy(PolicySpec(kind="path_tracker")), PathTrackerPolicy)
        with pytest.raises(ParseError):
            build_policy(PolicySpec(kind="net"))

    def test_labels(self):
        assert PolicySpec(kind="net", checkpoint="runs/decision.ckpt").label == "decision"
        assert PolicySpec(kind="expert", name="oracle").label == "oracle"

    def test_grid_is_ordered_by_seed(self, tmp_path):
        runs = run_grid([corridor_scenario()], [PolicySpec()], seeds=[2, 0, 1])
        logs = runs["expert"]["corridor"]
        assert [log.seed for log in logs] == [0, 1, 2]
        written = save_logs(runs, tmp_path)
        assert (tmp_path / "expert" / "corridor_0.csv") in written

    @pytest.mark.slow
    def test_parallel_matches_serial(self):
        scenarios, policies = [corridor_scenario()], [PolicySpec(), PolicySpec(kind="path_tracker")]
        serial = run_grid(scenarios, policies, seeds=[0, 1], jobs=1)
        parallel = run_grid(scenarios, policies, seeds=[0, 1], jobs=2)
        for method in serial:
            assert [log.model_dump() for log in serial[method]["corridor"]] == \
                [log.model_dump() for log in parallel[method]["corridor"]]


@pytest.mark.slow
def test_memory_helps_in_blind_spot(tmp_path):
    demos = collect_demonstrations([blind_spot_scenario()], seeds=range(6))
    policies = []
    for kind in ("decision", "cnn_reactive"):
        ckpt = tmp_path / f"{kind}.ckpt"
        train_policy_net(kind, demos, desk_train_config(max_iters=150), checkpoint=ckpt)
        policies.append(PolicySpec(kind="net", checkpoint=str(ckpt)))
    _, table = blind_spot_experiment(policies, seeds=range(20))
    decision, reactive = table.reports
    assert decision.sr >= reactive.sr
    assert decision.avg_int > reactive.avg_int
