import io
import json

import pytest
import yaml
from rich.console import Console

from controllers.main import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, ControllerMain, split_overrides
from main import CastMatchApplication
from models.errors import InvalidConfig
from views.report import ReportView

SCENARIO = ["--synth.dim=16", "--synth.n_actors=3", "--synth.n_side=1", "--synth.tracks_per_actor=4",
            "--synth.tracks_per_side=3"]


def run(*argv):
    console = Console(file=io.StringIO(), width=160)
    code = ControllerMain(ReportView(console)).run(list(argv))
    return code, console.file.getvalue()


@pytest.fixture
def workdir(tmp_path):
    return f"--paths.workdir={tmp_path}"


# region Tests


def test_split_overrides():
    assert split_overrides(["--labeler.lambda", "-0.6", "--paths.workdir=/tmp/x", "--fps=30"]) == {
        "labeler.lambda": -0.6, "paths.workdir": "/tmp/x", "fps": 30}
    with pytest.raises(InvalidConfig):
        split_overrides(["--labeler.lambda"])
    with pytest.raises(InvalidConfig):
        split_overrides(["stray"])


def test_synth_label_eval(tmp_path, workdir):
    assert run("synth", workdir, *SCENARIO)[0] == EXIT_OK
    assert sorted(p.name for p in (tmp_path / "templates").iterdir()) == ["actor_00.jsonl", "actor_01.jsonl",
                                                                         "actor_02.jsonl"]
    assert (tmp_path / "tracks.jsonl").exists() and (tmp_path / "ground_truth.csv").exists()

    code, output = run("label", workdir)
    assert code == EXIT_OK
    assert "HSL-NC" in output
    first = (tmp_path / "labels.csv").read_bytes()
    assert run("label", workdir)[0] == EXIT_OK
    assert (tmp_path / "labels.csv").read_bytes() == first

    code, output = run("eval", workdir)
    assert code == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert report["n_tracks"] == 15
    assert 0.0 <= report["overall_accuracy"] <= 1.0
    assert "Confusion" in output


def test_stream_then_track(tmp_path, workdir):
    stream = ["--stream.n_shots=4", "--stream.frames_per_shot=6", "--stream.identities_per_shot=2"]
    assert run("synth", "--mode", "stream", workdir, *SCENARIO, *stream)[0] == EXIT_OK
    assert (tmp_path / "detections.jsonl").exists()
    assert run("track", workdir)[0] == EXIT_OK
    tracks = [json.loads(line) for line in (tmp_path / "tracks.jsonl").read_text(encoding="utf-8").splitlines()]
    assert sum(len(t["frames"]) for t in tracks) == 4 * 6 * 2
    assert (tmp_path / "ground_truth.csv").exists()


def test_pipeline_from_stream(tmp_path, workdir):
    stream = ["--stream.n_shots=6", "--stream.frames_per_shot=8"]
    code, output = run("pipeline", "--synth", "stream", workdir, *SCENARIO, *stream)
    assert code == EXIT_OK
    for name in ("detections.jsonl", "tracks.jsonl", "labels.csv", "report.json", "ground_truth.csv"):
        assert (tmp_path / name).exists()
    assert "accuracy" in output


def test_pipeline_with_profiles(tmp_path, workdir):
    assert run("pipeline", "--synth", "tracks", workdir, *SCENARIO, "--labeler.method=HCSL")[0] == EXIT_OK
    profiles = yaml.safe_load((tmp_path / "profiles.yaml").read_text(encoding="utf-8"))
    assert [p["actor"] for p in profiles["profiles"]] == ["actor_00", "actor_01", "actor_02"]


def test_sweep_and_compare(tmp_path, workdir):
    assert run("synth", workdir, *SCENARIO)[0] == EXIT_OK

    code, output = run("sweep", workdir, "--segment_lengths=[1, 100000]", "--fps=1")
    assert code == EXIT_OK
    sweep = json.loads((tmp_path / "sweep.json").read_text(encoding="utf-8"))
    assert [entry["length_seconds"] for entry in sweep] == [1.0, 100000.0]
    assert sweep[0]["report"]["n_tracks"] == 1
    assert sweep[1]["report"]["n_tracks"] == 15

    code, output = run("compare", "--euc-lambda", "1.3", workdir)
    assert code == EXIT_OK
    comparison = json.loads((tmp_path / "comparison.json").read_text(encoding="utf-8"))
    assert len(comparison["variants"]) == 7 and comparison["skipped"] == []
    assert "HCSL-NC" in output


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["label", "--labeler.bogus=1"],
    ["label", "--labeler.edge_cost=EUC"],
    ["label", "stray"],
])
def test_usage_errors_exit_with_validation_code(argv, workdir):
    assert run(*argv, workdir)[0] == EXIT_VALIDATION


def test_missing_templates_is_a_validation_error(workdir):
    assert run("label", workdir)[0] == EXIT_VALIDATION


def test_missing_inputs_are_runtime_errors(tmp_path, workdir):
    assert run("synth", workdir, *SCENARIO)[0] == EXIT_OK
    (tmp_path / "tracks.jsonl").unlink()
    assert run("label", workdir)[0] == EXIT_RUNTIME
    assert run("eval", workdir)[0] == EXIT_RUNTIME


def test_pipeline_stage_failure_maps_to_validation_code(tmp_path, workdir):
    assert run("synth", workdir, *SCENARIO)[0] == EXIT_OK
    (tmp_path / "tracks.jsonl").write_text('{"track_id": 0}\n', encoding="utf-8")
    assert run("pipeline", workdir)[0] == EXIT_VALIDATION


def test_application_entry_point(tmp_path, workdir):
    assert CastMatchApplication(["synth", workdir, *SCENARIO]).exec() == EXIT_OK
    assert (tmp_path / "tracks.jsonl").exists()

# endregion Tests
