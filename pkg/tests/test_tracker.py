import numpy as np
import pytest

from models.config import HistMetric, ScenarioConfig, StreamConfig, TrackerConfig
from models.errors import DimensionMismatch, EmptyTrack, NonMonotonicFrame, ValidationError
from models.synth import generate_stream
from models.tracker import (Detection, FaceTracker, FrameDetections, Track, detect_shot_boundary, histogram_distance,
                            iou, run_tracker)

E0 = np.array([1.0, 0.0, 0.0, 0.0])
E1 = np.array([0.0, 1.0, 0.0, 0.0])
LEFT = (0.0, 0.0, 50.0, 50.0)
RIGHT = (200.0, 0.0, 50.0, 50.0)


def det(frame, bbox, descriptor, **kwargs):
    return Detection(frame, bbox, np.asarray(descriptor, dtype=float), **kwargs)


# region Tests


def test_iou():
    assert iou(LEFT, LEFT) == 1.0
    assert iou(LEFT, RIGHT) == 0.0
    assert iou((0, 0, 10, 10), (5, 0, 10, 10)) == pytest.approx(1 / 3)
    assert iou((0, 0, 10, 10), (10, 0, 10, 10)) == 0.0


def test_histogram_distances():
    assert histogram_distance([1, 2, 3], [2, 4, 6], HistMetric.INTERSECTION) == pytest.approx(0.0)
    assert histogram_distance([1, 0], [0, 1], HistMetric.INTERSECTION) == pytest.approx(1.0)
    assert histogram_distance([1, 0], [0, 1], HistMetric.CHI_SQUARE) == pytest.approx(1.0)
    assert histogram_distance([1, 1], [1, 1], HistMetric.CHI_SQUARE) == pytest.approx(0.0)
    with pytest.raises(ValidationError):
        histogram_distance([0, 0], [1, 0], HistMetric.INTERSECTION)
    with pytest.raises(DimensionMismatch):
        histogram_distance([1, 0], [1, 0, 0], HistMetric.INTERSECTION)


def test_detect_shot_boundary_uses_threshold():
    cfg = TrackerConfig(shot_hist_dist_max=0.5)
    assert detect_shot_boundary([1, 0], [0, 1], cfg)
    assert not detect_shot_boundary([1, 1], [1, 0.9], cfg)


def test_track_validation():
    with pytest.raises(EmptyTrack):
        Track(0, np.zeros((0, 4)), ())
    with pytest.raises(ValidationError):
        Track(0, np.stack([E0, E1]), (3, 3))
    track = Track(5, np.stack([E0, E1]), (1, 2))
    assert len(track) == 2 and track.first_frame == 1 and track.last_frame == 2
    assert track.stats.count == 2


def test_two_separated_identities_give_two_pure_tracks():
    frames = [FrameDetections(f, [det(f, LEFT, E0, identity="a"), det(f, RIGHT, E1, identity="b")]) for f in range(5)]
    tracks = run_tracker(frames, TrackerConfig())
    assert [t.id for t in tracks] == [0, 1]
    assert [len(t) for t in tracks] == [5, 5]
    assert tracks[0].identities == ("a",) * 5
    assert tracks[1].frames == (0, 1, 2, 3, 4)


def test_descriptor_gate_splits_tracks_with_overlapping_boxes():
    frames = [FrameDetections(0, [det(0, LEFT, E0)]), FrameDetections(1, [det(1, LEFT, E1)])]
    tracks = run_tracker(frames, TrackerConfig(desc_dist_max=0.6))
    assert [len(t) for t in tracks] == [1, 1]


def test_explicit_shot_boundary_closes_tracks():
    frames = [FrameDetections(f, [det(f, LEFT, E0)], shot_boundary=(f == 2)) for f in range(4)]
    tracks = run_tracker(frames, TrackerConfig())
    assert [t.frames for t in tracks] == [(0, 1), (2, 3)]


def test_explicit_flag_wins_over_histograms():
    frames = [FrameDetections(f, [det(f, LEFT, E0, hist=np.array([1.0, 0.0]) if f < 2 else np.array([0.0, 1.0]))],
                              shot_boundary=False) for f in range(4)]
    assert len(run_tracker(frames, TrackerConfig())) == 1


def test_histogram_change_closes_tracks():
    hists = [np.array([1.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([0.0, 1.0])]
    frames = [FrameDetections(f, [det(f, LEFT, E0, hist=hists[f])]) for f in range(4)]
    tracks = run_tracker(frames, TrackerConfig())
    assert [t.frames for t in tracks] == [(0, 1), (2, 3)]


def test_missed_frames_terminate_tracks():
    cfg = TrackerConfig(max_missed_frames=2)
    within = [FrameDetections(f, [det(f, LEFT, E0)]) for f in (0, 1, 4)]
    assert [t.frames for t in run_tracker(within, cfg)] == [(0, 1, 4)]
    beyond = [FrameDetections(f, [det(f, LEFT, E0)]) for f in (0, 1, 5)]
    assert [t.frames for t in run_tracker(beyond, cfg)] == [(0, 1), (5,)]


def test_empty_frames_finalize_stale_tracks():
    tracker = FaceTracker(TrackerConfig(max_missed_frames=2))
    assert tracker.step([det(0, LEFT, E0)]) == []
    assert tracker.step([], frame=1) == []
    assert tracker.step([], frame=2) == []
    finalized = tracker.step([], frame=3)
    assert [t.frames for t in finalized] == [(0,)]
    assert tracker.finalize() == []


def test_step_rejects_going_back_in_time_and_mixed_dims():
    tracker = FaceTracker()
    tracker.step([det(5, LEFT, E0)])
    with pytest.raises(NonMonotonicFrame):
        tracker.step([det(4, LEFT, E0)])
    with pytest.raises(DimensionMismatch):
        tracker.step([det(6, LEFT, [1.0, 0.0])])


def test_competing_detections_go_to_closest_descriptor():
    near = np.array([0.9, 0.1, 0.0, 0.0])
    tracker = FaceTracker(TrackerConfig(desc_dist_max=0.6))
    tracker.step([det(0, LEFT, E0)])
    tracker.step([det(1, (5.0, 0.0, 50.0, 50.0), E1 * 0.2 + E0 * 0.8), det(1, (2.0, 0.0, 50.0, 50.0), near)])
    tracks = sorted(tracker.finalize(), key=lambda t: t.id)
    assert np.allclose(tracks[0].faces[-1], near)
    assert [len(t) for t in tracks] == [2, 1]


def test_no_frames_no_tracks():
    assert run_tracker([], TrackerConfig()) == []


def test_stream_tracks_are_pure_and_stay_within_shots():
    stream_cfg = StreamConfig(n_shots=8, frames_per_shot=12, identities_per_shot=3)
    scenario = generate_stream(ScenarioConfig(seed=3, n_side=2), stream_cfg)
    tracks = run_tracker(scenario.frames, TrackerConfig())
    assert sum(len(t) for t in tracks) == scenario.detection_count
    for track in tracks:
        assert len(set(track.identities)) == 1
        assert track.first_frame // stream_cfg.frames_per_shot == track.last_frame // stream_cfg.frames_per_shot

# endregion Tests
