# synth.py
"""
Seeded generator of labelling scenarios with a template-to-video domain shift.

Every identity has an anchor on the unit sphere. Templates scatter around the anchor; video faces
scatter around the anchor translated by a fixed per-identity shift vector and renormalised.
Side actors appear in video only. `generate` emits ready-made tracks, `generate_stream` emits
frame-by-frame detections for the tracker.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from models.config import ScenarioConfig, StreamConfig
from models.labeler import SIDE_ACTOR, ActorCloud
from models.tracker import Detection, FrameDetections, Track
from models.vectors import l2_normalize_rows


@dataclass(eq=False)
class _Cast:
    templates: Dict[str, np.ndarray]
    actors: List[str]
    side_actors: List[str]

    def clouds(self) -> List[ActorCloud]:
        return [ActorCloud(name, self.templates[name]) for name in self.actors]

    def label_for(self, identity: str) -> str:
        return identity if identity in self.templates else SIDE_ACTOR


@dataclass(eq=False)
class Scenario(_Cast):
    tracks: List[Track] = field(default_factory=list)
    ground_truth: Dict[int, str] = field(default_factory=dict)
    outlier_faces: Optional[np.ndarray] = None


@dataclass(eq=False)
class StreamScenario(_Cast):
    frames: List[FrameDetections] = field(default_factory=list)
    shot_starts: List[int] = field(default_factory=list)

    @property
    def detection_count(self) -> int:
        return sum(len(f.detections) for f in self.frames)


class _Identities:
    """Anchors, templates and shifted video anchors of every identity, drawn from one generator."""

    def __init__(self, cfg: ScenarioConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.actors = [f"actor_{i:02d}" for i in range(cfg.n_actors)]
        self.side_actors = [f"side_{i:02d}" for i in range(cfg.n_side)]
        self.names = self.actors + self.side_actors
        count = len(self.names)
        self.anchors = l2_normalize_rows(rng.standard_normal((count, cfg.dim)))
        self.templates = {
            name: l2_normalize_rows(self.anchors[i] + cfg.sigma_source * rng.standard_normal((cfg.templates_per_actor, cfg.dim)))
            for i, name in enumerate(self.actors)
        }
        # shift directions orthogonal to the anchors: every actor keeps the same template-to-video similarity
        directions = rng.standard_normal((count, cfg.dim))
        directions -= np.einsum("ij,ij->i", directions, self.anchors)[:, np.newaxis] * self.anchors
        self.shifts = cfg.shift_magnitude * l2_normalize_rows(directions)
        self.outliers: List[np.ndarray] = []

    def video_anchor(self, index: int) -> np.ndarray:
        factor = 1.0
        if self.cfg.shift_spread > 0:
            factor = self.rng.uniform(1.0 - self.cfg.shift_spread, 1.0)
        return l2_normalize_rows(self.anchors[index] + factor * self.shifts[index])[0]

    def track_center(self, index: int) -> np.ndarray:
        anchor = self.video_anchor(index)
        return l2_normalize_rows(anchor + self.cfg.sigma_track * self.rng.standard_normal(self.cfg.dim))[0]

    def faces_around(self, center: np.ndarray, n_faces: int) -> np.ndarray:
        faces = l2_normalize_rows(center + self.cfg.sigma_face * self.rng.standard_normal((n_faces, self.cfg.dim)))
        if self.cfg.outlier_rate > 0:
            mask = self.rng.random(n_faces) < self.cfg.outlier_rate
            if mask.any():
                replaced = l2_normalize_rows(self.rng.standard_normal((int(mask.sum()), self.cfg.dim)))
                faces[mask] = replaced
                self.outliers.extend(replaced)
        return faces

    def outlier_matrix(self) -> np.ndarray:
        return np.stack(self.outliers) if self.outliers else np.zeros((0, self.cfg.dim))


def generate(cfg: Optional[ScenarioConfig] = None) -> Scenario:
    cfg = cfg or ScenarioConfig()
    rng = np.random.default_rng(cfg.seed)
    ids = _Identities(cfg, rng)
    low, high = cfg.faces_per_track_range

    drawn = []
    for index, name in enumerate(ids.names):
        count = cfg.tracks_per_actor if name in ids.templates else cfg.tracks_per_side
        for _ in range(count):
            n_faces = int(rng.integers(low, high + 1))
            drawn.append((name, ids.faces_around(ids.track_center(index), n_faces)))

    tracks, truth = [], {}
    frame = 0
    for track_id, position in enumerate(rng.permutation(len(drawn))):
        name, faces = drawn[position]
        tracks.append(Track(track_id, faces, tuple(range(frame, frame + len(faces)))))
        truth[track_id] = name if name in ids.templates else SIDE_ACTOR
        frame += len(faces) + 1
    return Scenario(ids.templates, ids.actors, ids.side_actors, tracks, truth, ids.outlier_matrix())


def generate_stream(cfg: Optional[ScenarioConfig] = None, stream: Optional[StreamConfig] = None) -> StreamScenario:
    """
    Detections of `stream.n_shots` shots. Each shot shows a random subset of identities, one per
    lane of the canvas, so boxes of different identities never overlap. The first frame of every
    shot after the first carries an explicit shot-boundary flag.
    """
    cfg = cfg or ScenarioConfig()
    stream = stream or StreamConfig()
    rng = np.random.default_rng(cfg.seed)
    ids = _Identities(cfg, rng)
    width, height = stream.canvas
    box = stream.box_size
    lanes = width // (2 * box)
    per_shot = min(stream.identities_per_shot, len(ids.names))

    frames: List[FrameDetections] = []
    shot_starts = []
    for shot in range(stream.n_shots):
        start = shot * stream.frames_per_shot
        shot_starts.append(start)
        cast = rng.choice(len(ids.names), size=per_shot, replace=False)
        lane_of = rng.choice(lanes, size=per_shot, replace=False)
        centers = [ids.track_center(int(i)) for i in cast]
        xs = lane_of * 2.0 * box + rng.uniform(0, box, size=per_shot)
        ys = rng.uniform(0, height - box, size=per_shot)
        base_hist = rng.dirichlet(np.full(stream.hist_bins, 0.5))

        for offset in range(stream.frames_per_shot):
            frame = start + offset
            lane_left = lane_of * 2.0 * box
            xs = np.clip(xs + stream.drift * rng.standard_normal(per_shot), lane_left, lane_left + box)
            ys = np.clip(ys + stream.drift * rng.standard_normal(per_shot), 0, height - box)
            hist = base_hist + rng.uniform(0, 0.01 / stream.hist_bins, size=stream.hist_bins)
            hist = hist / hist.sum()
            boundary = True if offset == 0 and shot > 0 else None
            detections = []
            for k, identity in enumerate(cast):
                face = ids.faces_around(centers[k], 1)[0]
                detections.append(Detection(frame, (float(xs[k]), float(ys[k]), float(box), float(box)), face,
                                            hist, boundary, ids.names[int(identity)]))
            frames.append(FrameDetections(frame, detections, boundary))
    return StreamScenario(ids.templates, ids.actors, ids.side_actors, frames, shot_starts)
