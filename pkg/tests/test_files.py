import json

import numpy as np
import pytest
import yaml

from models.config import LabelerConfig, Method, ProfileConfig, ScenarioConfig, StreamConfig
from models.errors import DimensionMismatch, EmptyActorFile, ParseError, ValidationError
from models.evaluation import score
from models.files import (load_detections, load_ground_truth, load_labels, load_templates, load_tracks,
                          save_detections, save_ground_truth, save_labels, save_profiles, save_report, save_templates,
                          save_tracks)
from models.labeler import run_labeler
from models.synth import generate, generate_stream
from models.tracker import run_tracker

SCENARIO = ScenarioConfig(dim=8, n_actors=2, n_side=1, templates_per_actor=3, tracks_per_actor=3, tracks_per_side=2,
                          faces_per_track_range=(2, 4), seed=5)


def detection_line(frame, **extra):
    record = {"frame": frame, "bbox": [0, 0, 10, 10], "descriptor": [1.0, 0.0, 0.0]}
    record.update(extra)
    return json.dumps(record)


def write(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


# region Tests


def test_templates_round_trip(tmp_path):
    scenario = generate(SCENARIO)
    save_templates(tmp_path / "templates", {name: scenario.templates[name] for name in reversed(scenario.actors)})
    clouds = load_templates(tmp_path / "templates", dim=8)
    assert [c.name for c in clouds] == scenario.actors
    for cloud in clouds:
        assert np.allclose(cloud.template_faces, scenario.templates[cloud.name])


def test_templates_are_normalized_on_load(tmp_path):
    write(tmp_path / "a.jsonl", [json.dumps({"descriptor": [3.0, 4.0]})])
    (cloud,) = load_templates(tmp_path)
    assert np.allclose(cloud.template_faces, [[0.6, 0.8]])


def test_template_errors(tmp_path):
    with pytest.raises(ValidationError):
        load_templates(tmp_path)
    write(tmp_path / "a.jsonl", [json.dumps({"descriptor": [1.0, 0.0]})])
    write(tmp_path / "b.jsonl", [])
    with pytest.raises(EmptyActorFile):
        load_templates(tmp_path)
    write(tmp_path / "b.jsonl", [json.dumps({"descriptor": [1.0, 0.0, 0.0]})])
    with pytest.raises(DimensionMismatch):
        load_templates(tmp_path)
    write(tmp_path / "b.jsonl", [json.dumps({"descriptor": [0.0, 0.0]})])
    with pytest.raises(ParseError):
        load_templates(tmp_path)


def test_malformed_line_is_reported_with_its_number(tmp_path):
    path = write(tmp_path / "detections.jsonl", [detection_line(f) for f in range(6)] + ["{not json"])
    with pytest.raises(ParseError) as error:
        load_detections(path)
    assert error.value.line == 7
    assert str(error.value).startswith(f"{path}:7:")


@pytest.mark.parametrize("line", [
    detection_line(-1),
    detection_line(0, bbox=[0, 0, 0, 10]),
    detection_line(0, bbox=[0, 0, 10]),
    detection_line(0, bbox=[0, "x", 10, 10]),
    detection_line(0, hist=[0, 0]),
    detection_line(0, shot_boundary="yes"),
    json.dumps({"frame": 0, "bbox": [0, 0, 10, 10]}),
    json.dumps([1, 2, 3]),
])
def test_invalid_detection_records(tmp_path, line):
    with pytest.raises(ParseError):
        load_detections(write(tmp_path / "detections.jsonl", [line]))


def test_detections_must_not_go_back_in_time(tmp_path):
    path = write(tmp_path / "detections.jsonl", [detection_line(3), detection_line(2)])
    with pytest.raises(ParseError) as error:
        load_detections(path)
    assert error.value.line == 2


def test_empty_detection_file_gives_no_tracks(tmp_path):
    frames = load_detections(write(tmp_path / "detections.jsonl", []))
    assert frames == []
    assert run_tracker(frames) == []


def test_detections_round_trip(tmp_path):
    stream = generate_stream(SCENARIO, StreamConfig(n_shots=3, frames_per_shot=4, identities_per_shot=2))
    save_detections(tmp_path / "detections.jsonl", stream.frames)
    frames = load_detections(tmp_path / "detections.jsonl", dim=8)
    assert [f.frame for f in frames] == [f.frame for f in stream.frames]
    assert [f.shot_boundary for f in frames] == [f.shot_boundary for f in stream.frames]
    for loaded, original in zip(frames, stream.frames):
        for a, b in zip(loaded.detections, original.detections):
            assert a.bbox == b.bbox and a.identity == b.identity
            assert np.allclose(a.descriptor, b.descriptor) and np.allclose(a.hist, b.hist)


def test_tracks_round_trip(tmp_path):
    scenario = generate(SCENARIO)
    save_tracks(tmp_path / "tracks.jsonl", scenario.tracks)
    tracks = load_tracks(tmp_path / "tracks.jsonl", dim=8)
    assert [t.id for t in tracks] == [t.id for t in scenario.tracks]
    assert all(a.frames == b.frames and np.allclose(a.faces, b.faces) for a, b in zip(tracks, scenario.tracks))


def test_track_file_errors(tmp_path):
    record = {"track_id": 0, "frames": [0], "descriptors": [[1.0, 0.0]]}
    with pytest.raises(ParseError):
        load_tracks(write(tmp_path / "t.jsonl", [json.dumps(record), json.dumps(record)]))
    with pytest.raises(ParseError):
        load_tracks(write(tmp_path / "t.jsonl", [json.dumps({**record, "descriptors": []})]))
    with pytest.raises(ParseError):
        load_tracks(write(tmp_path / "t.jsonl", [json.dumps({**record, "frames": [0, 1]})]))


def test_labels_round_trip_and_score(tmp_path):
    scenario = generate(SCENARIO)
    labeling = run_labeler(scenario.tracks, scenario.clouds(), LabelerConfig())
    save_labels(tmp_path / "labels.csv", labeling)
    entries = load_labels(tmp_path / "labels.csv")
    assert entries == labeling.entries
    from_file = score({i: e.label for i, e in entries.items()}, scenario.ground_truth)
    assert from_file.overall_accuracy == score(labeling, scenario.ground_truth).overall_accuracy

    save_labels(tmp_path / "again.csv", labeling)
    assert (tmp_path / "again.csv").read_bytes() == (tmp_path / "labels.csv").read_bytes()
    assert (tmp_path / "labels.csv").read_text(encoding="utf-8").splitlines()[0] == "track_id,label,cost,iteration"


def test_label_file_errors(tmp_path):
    with pytest.raises(ParseError) as error:
        load_labels(write(tmp_path / "l.csv", ["track,label,cost,iteration"]))
    assert error.value.line == 1
    with pytest.raises(ParseError):
        load_labels(write(tmp_path / "l.csv", ["track_id,label,cost,iteration", "x,a,0.5,"]))
    with pytest.raises(ParseError):
        load_labels(write(tmp_path / "l.csv", ["track_id,label,cost,iteration", "1,a,0.5"]))


def test_ground_truth_round_trip(tmp_path):
    truth = {3: "actor_01", 0: "SIDE_ACTOR", 1: "actor_00"}
    save_ground_truth(tmp_path / "gt.csv", truth)
    assert load_ground_truth(tmp_path / "gt.csv") == truth
    assert (tmp_path / "gt.csv").read_text(encoding="utf-8").splitlines()[1] == "0,SIDE_ACTOR"


def test_report_file(tmp_path):
    report = score({0: "a", 1: "b"}, {0: "a", 1: "a"})
    save_report(tmp_path / "report.json", report)
    loaded = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert loaded == report.to_dict()
    assert loaded["overall_accuracy"] == 0.5


def test_profiles_dump(tmp_path):
    scenario = generate(SCENARIO)
    cfg = LabelerConfig(method=Method.HCSL, profile=ProfileConfig(min_cluster_size=1))
    labeling = run_labeler(scenario.tracks, scenario.clouds(), cfg)
    save_profiles(tmp_path / "profiles.yaml", labeling.clouds)
    dump = yaml.safe_load((tmp_path / "profiles.yaml").read_text(encoding="utf-8"))
    assert [p["actor"] for p in dump["profiles"]] == scenario.actors
    for profile, cloud in zip(dump["profiles"], labeling.clouds):
        assert profile["faces"] == cloud.acquired_count
        assert sum(c["size"] for c in profile["clusters"]) == cloud.acquired_count

# endregion Tests
