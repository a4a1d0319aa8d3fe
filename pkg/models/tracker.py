# tracker.py
"""
Face tracker: per-frame detections are chained into tracks.

A detection may extend a live track when the boxes overlap and the descriptor is close to the
track's most recent face. Competing candidates are resolved with one minimum-cost assignment per
frame on descriptor distances. Tracks end after too many frames without an update and at every
shot boundary.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from models.assignment import solve_min_assignment
from models.config import HistMetric, TrackerConfig
from models.errors import DimensionMismatch, EmptyTrack, NonMonotonicFrame, ValidationError
from models.vectors import FaceSetStats, as_matrix

log = logging.getLogger(__name__)

BBox = Tuple[float, float, float, float]


@dataclass(frozen=True, eq=False)
class Detection:
    frame: int
    bbox: BBox
    descriptor: np.ndarray
    hist: Optional[np.ndarray] = None
    shot_boundary: Optional[bool] = None
    # ground-truth annotation, never used for association
    identity: Optional[str] = None

    def __post_init__(self):
        if self.frame < 0:
            raise ValidationError(f"frame index {self.frame} is negative")
        if len(self.bbox) != 4:
            raise ValidationError(f"bbox must be (x, y, w, h), got {self.bbox}")
        _, _, w, h = self.bbox
        if w <= 0 or h <= 0:
            raise ValidationError(f"bbox {tuple(self.bbox)} at frame {self.frame} has non-positive size")


@dataclass(eq=False)
class FrameDetections:
    frame: int
    detections: List[Detection] = field(default_factory=list)
    shot_boundary: Optional[bool] = None


@dataclass(eq=False)
class Track:
    id: int
    faces: np.ndarray
    frames: Tuple[int, ...]
    last_bbox: Optional[BBox] = None
    identities: Optional[Tuple[Optional[str], ...]] = None
    stats: FaceSetStats = field(init=False)

    def __post_init__(self):
        self.faces = as_matrix(self.faces)
        self.frames = tuple(int(f) for f in self.frames)
        if self.faces.shape[0] == 0:
            raise EmptyTrack(f"track {self.id} has no faces")
        if len(self.frames) != self.faces.shape[0]:
            raise ValidationError(f"track {self.id} has {self.faces.shape[0]} faces but {len(self.frames)} frames")
        if any(b <= a for a, b in zip(self.frames, self.frames[1:])):
            raise ValidationError(f"track {self.id} frames are not strictly increasing")
        self.stats = FaceSetStats.from_faces(self.faces)

    def __len__(self) -> int:
        return self.faces.shape[0]

    @property
    def dim(self) -> int:
        return self.faces.shape[1]

    @property
    def first_frame(self) -> int:
        return self.frames[0]

    @property
    def last_frame(self) -> int:
        return self.frames[-1]


@dataclass(eq=False)
class _LiveTrack:
    id: int
    faces: List[np.ndarray]
    frames: List[int]
    last_bbox: BBox
    identities: List[Optional[str]]

    @classmethod
    def start(cls, track_id: int, detection: Detection) -> "_LiveTrack":
        return cls(track_id, [detection.descriptor], [detection.frame], tuple(detection.bbox), [detection.identity])

    def extend(self, detection: Detection) -> None:
        self.faces.append(detection.descriptor)
        self.frames.append(detection.frame)
        self.last_bbox = tuple(detection.bbox)
        self.identities.append(detection.identity)

    def freeze(self) -> Track:
        identities = tuple(self.identities) if any(i is not None for i in self.identities) else None
        return Track(self.id, np.stack(self.faces), tuple(self.frames), self.last_bbox, identities)


def iou(a: BBox, b: BBox) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    ih = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = iw * ih
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def histogram_distance(prev_hist, curr_hist, metric: HistMetric) -> float:
    p = np.asarray(prev_hist, dtype=np.float64)
    q = np.asarray(curr_hist, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionMismatch(p.shape[-1], q.shape[-1], what="histogram")
    p_mass, q_mass = p.sum(), q.sum()
    if p_mass <= 0 or q_mass <= 0:
        raise ValidationError("histograms must have positive mass")
    p, q = p / p_mass, q / q_mass
    if metric is HistMetric.INTERSECTION:
        return float(1.0 - np.minimum(p, q).sum())
    total = p + q
    mask = total > 0
    return float(0.5 * np.sum((p[mask] - q[mask]) ** 2 / total[mask]))


def detect_shot_boundary(prev_hist, curr_hist, cfg: TrackerConfig) -> bool:
    return histogram_distance(prev_hist, curr_hist, cfg.hist_metric) > cfg.shot_hist_dist_max


class FaceTracker:
    def __init__(self, cfg: Optional[TrackerConfig] = None, dim: Optional[int] = None):
        self.cfg = cfg or TrackerConfig()
        self.dim = dim
        self._live: List[_LiveTrack] = []
        self._next_id = 0
        self._last_frame: Optional[int] = None
        self._prev_hist: Optional[np.ndarray] = None

    def step(self, detections: Sequence[Detection], shot_boundary: Optional[bool] = None,
             frame: Optional[int] = None) -> List[Track]:
        """
        Feed one frame. Returns the tracks finalized while processing it.

        :param detections: all detections of the frame.
        :param shot_boundary: explicit cut flag; when None the frame histograms decide.
        :param frame: frame index, needed only when `detections` is empty.
        """
        frame = self._frame_of(detections, frame)
        if frame is None:
            return []
        if self._last_frame is not None and frame < self._last_frame:
            raise NonMonotonicFrame(frame, self._last_frame)
        self._last_frame = frame
        for detection in detections:
            if self.dim is None:
                self.dim = detection.descriptor.shape[-1]
            elif detection.descriptor.shape[-1] != self.dim:
                raise DimensionMismatch(self.dim, detection.descriptor.shape[-1], what=f"detection at frame {frame}")

        finalized: List[Track] = []
        if self._is_boundary(detections, shot_boundary):
            log.debug("Shot boundary at frame %d, closing %d live tracks", frame, len(self._live))
            finalized.extend(self._close(self._live))

        stale = [t for t in self._live if frame - t.frames[-1] - 1 > self.cfg.max_missed_frames]
        finalized.extend(self._close(stale))

        matched = self._associate(detections, frame)
        for i, detection in enumerate(detections):
            if i not in matched:
                self._live.append(_LiveTrack.start(self._next_id, detection))
                self._next_id += 1

        expired = [t for t in self._live
                   if t.frames[-1] != frame and frame - t.frames[-1] > self.cfg.max_missed_frames]
        finalized.extend(self._close(expired))
        return finalized

    def finalize(self) -> List[Track]:
        return self._close(self._live)

    def _frame_of(self, detections: Sequence[Detection], frame: Optional[int]) -> Optional[int]:
        frames = {d.frame for d in detections}
        if len(frames) > 1:
            raise ValidationError(f"one step received detections of frames {sorted(frames)}")
        if frames:
            (only,) = frames
            if frame is not None and frame != only:
                raise ValidationError(f"detections belong to frame {only}, not {frame}")
            return only
        return frame

    def _is_boundary(self, detections: Sequence[Detection], shot_boundary: Optional[bool]) -> bool:
        hist = next((d.hist for d in detections if d.hist is not None), None)
        boundary = bool(shot_boundary)
        if shot_boundary is None and hist is not None and self._prev_hist is not None:
            boundary = detect_shot_boundary(self._prev_hist, hist, self.cfg)
        if hist is not None:
            self._prev_hist = np.asarray(hist, dtype=np.float64)
        return boundary

    def _associate(self, detections: Sequence[Detection], frame: int) -> Dict[int, int]:
        """Extend live tracks with this frame's detections; returns detection index -> track id."""
        candidates = [t for t in self._live if t.frames[-1] < frame]
        if not candidates or not detections:
            return {}
        descriptors = np.stack([d.descriptor for d in detections])
        recent = np.stack([t.faces[-1] for t in candidates])
        if descriptors.shape[1] != recent.shape[1]:
            raise DimensionMismatch(recent.shape[1], descriptors.shape[1])
        distances = cdist(recent, descriptors)
        overlaps = np.array([[iou(t.last_bbox, d.bbox) for d in detections] for t in candidates])
        gate = (overlaps > self.cfg.iou_min) & (distances <= self.cfg.desc_dist_max)
        if not gate.any():
            return {}
        # any gated matching is cheaper than a single forbidden pair
        forbidden = self.cfg.desc_dist_max * (1 + min(gate.shape)) + 1.0
        cost = np.where(gate, distances, forbidden)

        matched = {}
        for ti, di in solve_min_assignment(cost).pairs:
            if gate[ti, di] and cost[ti, di] <= self.cfg.desc_dist_max:
                candidates[ti].extend(detections[di])
                matched[di] = candidates[ti].id
        return matched

    def _close(self, tracks: Iterable[_LiveTrack]) -> List[Track]:
        closing = list(tracks)
        if not closing:
            return []
        ids = {t.id for t in closing}
        self._live = [t for t in self._live if t.id not in ids]
        finalized = [t.freeze() for t in closing]
        log.debug("Finalized tracks %s", sorted(ids))
        return finalized


def run_tracker(frames: Iterable[FrameDetections], cfg: Optional[TrackerConfig] = None,
                dim: Optional[int] = None) -> List[Track]:
    tracker = FaceTracker(cfg, dim)
    tracks: List[Track] = []
    for frame in frames:
        tracks.extend(tracker.step(frame.detections, frame.shot_boundary, frame=frame.frame))
    tracks.extend(tracker.finalize())
    tracks.sort(key=lambda t: t.id)
    log.info("Tracked %d faces into %d tracks", sum(len(t) for t in tracks), len(tracks))
    return tracks

