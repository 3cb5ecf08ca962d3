import json

import pytest
from typer.testing import CliRunner

from navlite.cli.main import app, load_run_config, parse_endpoint
from navlite.core.errors import ParseError
from navlite.decision.checkpoint import load_checkpoint
from navlite.mapsys.graph import MapBuilder
from navlite.mapsys.storage import save_bundle
from navlite.mapsys.types import Pose2D

from .conftest import make_exit

runner = CliRunner()


@pytest.fixture
def bundle_file(tmp_path, two_floors):
    path = tmp_path / "bundle.json"
    save_bundle(two_floors, path)
    return path


class TestMapCommands:

    def test_validate_ok(self, bundle_file):
        result = runner.invoke(app, ["map", "validate", str(bundle_file)])
        assert result.exit_code == 0
        assert "Bundle valido" in result.output

    def test_validate_violations_exit_2(self, tmp_path, two_floors):
        bad = MapBuilder(two_floors).add_exit(make_exit("x", "f9", (1, 1))).build()
        path = tmp_path / "bad.json"
        save_bundle(bad, path)
        result = runner.invoke(app, ["map", "validate", str(path)])
        assert result.exit_code == 2
        assert "missing-floorplan" in result.output

    def test_missing_file_exit_1(self, tmp_path):
        result = runner.invoke(app, ["map", "validate", str(tmp_path / "nope.json")])
        assert result.exit_code == 1


class TestPlanning:

    def test_plan_writes_route(self, tmp_path, bundle_file):
        out = tmp_path / "route.json"
        result = runner.invoke(app, ["plan", str(bundle_file), "-s", "f1_door", "-g", "f2_office",
                                     "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert "f2_stairs" in out.read_text()

    def test_intent_from_pose(self, tmp_path, bundle_file):
        out = tmp_path / "intent.json"
        result = runner.invoke(app, ["intent", str(bundle_file), "-s", "f1,2.0,1.5",
                                     "-g", "f2_office", "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert "Upstairs" in out.read_text()

    def test_bad_endpoint(self, bundle_file):
        result = runner.invoke(app, ["plan", str(bundle_file), "-s", "f1,abc", "-g", "f2_office"])
        assert result.exit_code == 1

    def test_parse_endpoint(self, two_floors):
        assert parse_endpoint("f1_door", two_floors) == "f1_door"
        assert parse_endpoint("f2,1.0,2.0,0.5", two_floors) == Pose2D(frame="f2", x=1.0, y=2.0,
                                                                       heading=0.5)
        with pytest.raises(ParseError):
            parse_endpoint("f2,1.0", two_floors)


class TestRunConfig:

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"scenarios": ["corridor"], "seeds": [4, 5], "jobs": 2}))
        run = load_run_config(path, seeds=[0], jobs=None, scenarios=[])
        assert run.seeds == [0] and run.jobs == 2 and run.scenarios == ["corridor"]

    def test_bad_json_location(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text('{\n "seeds": [1,\n}')
        with pytest.raises(ParseError) as info:
            load_run_config(path)
        assert info.value.location.startswith("linha")

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(ParseError) as info:
            load_run_config(None, checkpoint=str(tmp_path / "none.ckpt"))
        assert info.value.location == "checkpoint"

    def test_empty_seeds(self):
        with pytest.raises(ParseError):
            load_run_config(None, seeds=None).model_copy(update={"seeds": []}).check()


class TestPipeline:

    def _eval(self, out):
        return runner.invoke(app, ["eval", "--scenario", "corridor", "--seeds", "2",
                                   "--out", str(out)])

    def test_eval_and_report(self, tmp_path):
        result = self._eval(tmp_path / "run")
        assert result.exit_code == 0, result.output
        run = tmp_path / "run"
        assert (run / "logs" / "expert" / "corridor_1.csv").exists()
        assert (run / "reports" / "metrics.csv").read_text().startswith("Task,Method,Success")
        summary = json.loads((run / "reports" / "summary.json").read_text())
        assert summary["seeds"] == [0, 1]

        result = runner.invoke(app, ["report", str(run / "logs"), "--kind", "ablation",
                                     "--out", str(tmp_path / "again")])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "again" / "ablation.csv").exists()

    def test_eval_is_byte_identical(self, tmp_path):
        for name in ("a", "b"):
            assert self._eval(tmp_path / name).exit_code == 0
        files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*")
                       if p.is_file() and p.suffix in (".csv", ".json"))
        assert files
        for rel in files:
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()

    def test_report_without_logs(self, tmp_path):
        result = runner.invoke(app, ["report", str(tmp_path)])
        assert result.exit_code == 1

    def test_train_synthetic(self, tmp_path):
        result = runner.invoke(app, ["train", "--synthetic", "--iters", "2", "--out",
                                     str(tmp_path)])
        assert result.exit_code == 0, result.output
        net = load_checkpoint(tmp_path / "checkpoints" / "decision.ckpt")
        assert net.spec.input_side == 16
        curve = (tmp_path / "reports" / "loss_decision.csv").read_text().splitlines()
        assert curve[0] == "iteration,loss" and len(curve) == 3

    def test_train_needs_data(self, tmp_path):
        result = runner.invoke(app, ["train", "--out", str(tmp_path)])
        assert result.exit_code == 1

    def test_collect(self, tmp_path):
        result = runner.invoke(app, ["collect", "--scenario", "corridor", "-n", "1", "--out",
                                     str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "dataset" / "demos.bin").exists()
        assert (tmp_path / "dataset" / "demos.index.json").exists()


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert "NAVLITE v" in result.output
