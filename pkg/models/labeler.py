# labeler.py
"""
Track labelling against actor clouds.

Self-labelling (HSL, and HCSL with actor profiles) repeatedly solves an actors x tracks assignment
and moves every confidently assigned track into its actor's cloud, so the clouds drift from the
template domain towards the in-video appearance of each actor. The direct baselines (AVG, 1NN)
label every track in one pass; TopTen grows the clouds with the cheapest tenth of the remaining
tracks per round.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from models.assignment import solve_min_assignment
from models.config import EdgeCost, LabelerConfig, Method, ProfileConfig
from models.errors import DimensionMismatch, EmptySet, EmptyTemplates, ValidationError
from models.profile import ActorProfile
from models.tracker import Track
from models.vectors import FaceSetStats, StackedStats, as_matrix, mean_pairwise_sqdist

log = logging.getLogger(__name__)

SIDE_ACTOR = "SIDE_ACTOR"


class ActorCloud:
    """
    Faces standing for one actor: the fixed templates plus everything acquired from tracks.

    `stats` covers the faces the edge cost is computed on. Without a profile that is templates
    and acquired faces; with a profile it is templates and the profile representatives.
    """

    def __init__(self, name: str, template_faces, dim: Optional[int] = None):
        templates = as_matrix(template_faces, dim) if len(template_faces) else np.zeros((0, dim or 0))
        if templates.shape[0] == 0:
            raise EmptyTemplates(f"actor {name} has no template faces")
        templates = templates.copy()
        templates.setflags(write=False)
        self.name = name
        self.template_faces = templates
        self.template_stats = FaceSetStats.from_faces(templates)
        self.acquired_faces: List[np.ndarray] = []
        self.acquired_track_ids: List[int] = []
        self.profile: Optional[ActorProfile] = None
        self.stats = self.template_stats

    @property
    def dim(self) -> int:
        return self.template_faces.shape[1]

    @property
    def acquired_count(self) -> int:
        return sum(f.shape[0] for f in self.acquired_faces)

    def copy(self) -> "ActorCloud":
        twin = ActorCloud(self.name, self.template_faces)
        twin.acquired_faces = list(self.acquired_faces)
        twin.acquired_track_ids = list(self.acquired_track_ids)
        twin.stats = self.stats
        if self.profile is not None:
            twin.profile = self.profile.replay()
        return twin

    def enable_profile(self, cfg: ProfileConfig) -> "ActorCloud":
        self.profile = ActorProfile(self.name, cfg, self.dim)
        for faces in self.acquired_faces:
            self.profile.add_faces(faces)
        self._refresh_profile_stats()
        return self

    def acquire(self, track: Track) -> None:
        if track.dim != self.dim:
            raise DimensionMismatch(self.dim, track.dim, what=f"track {track.id}")
        self.acquired_faces.append(track.faces)
        self.acquired_track_ids.append(track.id)
        if self.profile is None:
            self.stats = self.stats + track.stats
        else:
            self.profile.add_faces(track.faces)
            self._refresh_profile_stats()

    def active_faces(self) -> np.ndarray:
        """The faces `stats` summarises, as one matrix."""
        if self.profile is not None:
            reps = self.profile.representative_matrix()
            return np.vstack([self.template_faces, reps]) if reps.shape[0] else self.template_faces
        return np.vstack([self.template_faces, *self.acquired_faces])

    def _refresh_profile_stats(self) -> None:
        reps = self.profile.representative_matrix()
        self.stats = self.template_stats
        if reps.shape[0]:
            self.stats = self.template_stats + FaceSetStats.from_faces(reps)


@dataclass(frozen=True)
class LabelEntry:
    label: str
    cost: float
    iteration: Optional[int] = None


@dataclass(eq=False)
class Labeling:
    entries: Dict[int, LabelEntry] = field(default_factory=dict)
    clouds: List[ActorCloud] = field(default_factory=list)
    variant: str = ""
    runtime_seconds: float = 0.0
    iterations: int = 0

    def labels(self) -> Dict[int, str]:
        return {track_id: entry.label for track_id, entry in self.entries.items()}

    def label_of(self, track_id: int) -> str:
        return self.entries[track_id].label

    @property
    def side_actor_count(self) -> int:
        return sum(1 for e in self.entries.values() if e.label == SIDE_ACTOR)


def avg_cost(track: Track, cloud: ActorCloud) -> float:
    return mean_pairwise_sqdist(track.stats, cloud.stats)


def normalized_costs(track: Track, clouds: Sequence[ActorCloud]) -> np.ndarray:
    if not clouds:
        raise EmptySet("normalized costs need at least one actor cloud")
    d = np.array([avg_cost(track, cloud) for cloud in clouds])
    return d - d.mean()


def edge_costs(distances: np.ndarray, edge_cost: EdgeCost) -> np.ndarray:
    """Actors x tracks edge costs from the matrix of average squared distances."""
    if edge_cost is EdgeCost.NC:
        return distances - distances.mean(axis=0, keepdims=True)
    return distances


class _DistanceCache:
    """Average squared distances between every cloud and every track; rows are refreshed on demand."""

    def __init__(self, tracks: Sequence[Track], clouds: Sequence[ActorCloud]):
        self.tracks = StackedStats.from_stats([t.stats for t in tracks])
        self.clouds = clouds
        self.matrix = np.vstack([self.tracks.mean_sqdist_to(c.stats) for c in clouds])

    def refresh(self, actor_indices) -> None:
        for i in actor_indices:
            self.matrix[i] = self.tracks.mean_sqdist_to(self.clouds[i].stats)


def _validate(tracks: Sequence[Track], clouds: Sequence[ActorCloud]) -> None:
    if not clouds:
        raise EmptySet("no actor clouds to label against")
    dim = clouds[0].dim
    for cloud in clouds:
        if cloud.dim != dim:
            raise DimensionMismatch(dim, cloud.dim, what=f"actor {cloud.name}")
    seen = set()
    for track in tracks:
        if track.dim != dim:
            raise DimensionMismatch(dim, track.dim, what=f"track {track.id}")
        if track.id in seen:
            raise ValidationError(f"duplicate track id {track.id}")
        seen.add(track.id)


def _working_clouds(clouds: Sequence[ActorCloud], cfg: LabelerConfig) -> List[ActorCloud]:
    working = [cloud.copy() for cloud in clouds]
    if cfg.method is Method.HCSL:
        for cloud in working:
            if cloud.profile is None:
                cloud.enable_profile(cfg.profile)
    return working


def run_hsl(tracks: Sequence[Track], clouds: Sequence[ActorCloud], cfg: LabelerConfig) -> Labeling:
    """
    Hungarian self-labelling.

    Every iteration assigns at most one remaining track to each actor. An assigned track is accepted
    when its edge cost is below the acceptance threshold; accepted tracks join their actor's cloud
    and leave the pool. The loop stops at the first iteration accepting nothing; tracks still in
    the pool are side actors.
    """
    if cfg.method not in (Method.HSL, Method.HCSL):
        raise ValidationError(f"run_hsl cannot run method {cfg.method.value}")
    _validate(tracks, clouds)
    working = _working_clouds(clouds, cfg)
    labeling = Labeling(clouds=working, variant=cfg.variant)
    if not tracks:
        return labeling

    threshold = cfg.acceptance_threshold
    cache = _DistanceCache(tracks, working)
    remaining = np.arange(len(tracks))
    last_costs = None
    iteration = 0
    while remaining.size:
        costs = edge_costs(cache.matrix[:, remaining], cfg.edge_cost)
        last_costs = costs
        accepted = []
        for actor, column in solve_min_assignment(costs).pairs:
            if costs[actor, column] < threshold:
                accepted.append((actor, column, float(costs[actor, column])))
        if not accepted:
            break

        for actor, column, cost in accepted:
            track = tracks[remaining[column]]
            working[actor].acquire(track)
            labeling.entries[track.id] = LabelEntry(working[actor].name, cost, iteration)
        log.info("Iteration %d accepted %s", iteration,
                 ", ".join(f"({working[a].name}, {tracks[remaining[c]].id}, {cost:.4f})" for a, c, cost in accepted))
        cache.refresh({actor for actor, _, _ in accepted})
        remaining = np.delete(remaining, [column for _, column, _ in accepted])
        iteration += 1

    labeling.iterations = iteration + (1 if remaining.size else 0)
    if remaining.size:
        lowest = last_costs.min(axis=0)
        for column, index in enumerate(remaining):
            labeling.entries[tracks[index].id] = LabelEntry(SIDE_ACTOR, float(lowest[column]), None)
    log.info("%s labelled %d of %d tracks as actors", cfg.variant, len(tracks) - remaining.size, len(tracks))
    return labeling


def _direct_labeling(tracks: Sequence[Track], clouds: Sequence[ActorCloud], costs: np.ndarray,
                     cfg: LabelerConfig) -> Labeling:
    labeling = Labeling(clouds=[c.copy() for c in clouds], variant=cfg.variant, iterations=1)
    if not tracks:
        return labeling
    best = np.argmin(costs, axis=0)
    for column, track in enumerate(tracks):
        cost = float(costs[best[column], column])
        label = SIDE_ACTOR if cost > cfg.side_cut else clouds[best[column]].name
        labeling.entries[track.id] = LabelEntry(label, cost, None)
    return labeling


def run_avg_baseline(tracks: Sequence[Track], clouds: Sequence[ActorCloud], cfg: LabelerConfig) -> Labeling:
    """Each track goes to the actor whose templates are closest on average; the edge cost setting does not apply."""
    _validate(tracks, clouds)
    if not tracks:
        return _direct_labeling(tracks, clouds, np.zeros((len(clouds), 0)), cfg)
    stacked = StackedStats.from_stats([t.stats for t in tracks])
    distances = np.vstack([stacked.mean_sqdist_to(c.template_stats) for c in clouds])
    return _direct_labeling(tracks, clouds, distances, cfg)


def run_1nn_baseline(tracks: Sequence[Track], clouds: Sequence[ActorCloud], cfg: LabelerConfig) -> Labeling:
    """Each track goes to the actor owning the single template face closest to any of its faces."""
    _validate(tracks, clouds)
    if not tracks:
        return _direct_labeling(tracks, clouds, np.zeros((len(clouds), 0)), cfg)
    faces = np.vstack([t.faces for t in tracks])
    offsets = np.cumsum([0] + [len(t) for t in tracks[:-1]])
    distances = np.vstack([
        np.minimum.reduceat(cdist(faces, c.template_faces, "sqeuclidean").min(axis=1), offsets)
        for c in clouds
    ])
    return _direct_labeling(tracks, clouds, distances, cfg)


def run_topten_baseline(tracks: Sequence[Track], clouds: Sequence[ActorCloud], cfg: LabelerConfig) -> Labeling:
    """
    Self-labelling by percentile: every round the cheapest `topten_percentile` share of the
    remaining tracks joins its closest actor. Accepted tracks whose cost exceeds the side-actor
    threshold are relabelled afterwards.
    """
    _validate(tracks, clouds)
    working = [cloud.copy() for cloud in clouds]
    labeling = Labeling(clouds=working, variant=cfg.variant)
    if not tracks:
        return labeling

    cache = _DistanceCache(tracks, working)
    remaining = np.arange(len(tracks))
    ids = np.array([t.id for t in tracks])
    iteration = 0
    while remaining.size:
        costs = edge_costs(cache.matrix[:, remaining], cfg.edge_cost)
        best = np.argmin(costs, axis=0)
        best_cost = costs[best, np.arange(remaining.size)]
        take = max(1, math.ceil(cfg.topten_percentile * remaining.size - 1e-9))
        order = np.lexsort((ids[remaining], best_cost))[:take]
        for column in order:
            track = tracks[remaining[column]]
            working[best[column]].acquire(track)
            labeling.entries[track.id] = LabelEntry(working[best[column]].name, float(best_cost[column]), iteration)
        log.info("Round %d moved %d tracks, %d left", iteration, take, remaining.size - take)
        cache.refresh(set(int(a) for a in best[order]))
        remaining = np.delete(remaining, order)
        iteration += 1

    labeling.iterations = iteration
    for track_id, entry in list(labeling.entries.items()):
        if entry.cost > cfg.side_cut:
            labeling.entries[track_id] = LabelEntry(SIDE_ACTOR, entry.cost, entry.iteration)
    return labeling


_RUNNERS = {
    Method.HSL: run_hsl,
    Method.HCSL: run_hsl,
    Method.AVG: run_avg_baseline,
    Method.NN1: run_1nn_baseline,
    Method.TOPTEN: run_topten_baseline,
}


def run_labeler(tracks: Sequence[Track], clouds: Sequence[ActorCloud], cfg: LabelerConfig) -> Labeling:
    started = time.perf_counter()
    labeling = _RUNNERS[cfg.method](tracks, clouds, cfg)
    labeling.runtime_seconds = time.perf_counter() - started
    # iteration order differs per method; keep entries in track order
    labeling.entries = {t.id: labeling.entries[t.id] for t in tracks}
    log.info("%s finished in %.2fs", cfg.variant, labeling.runtime_seconds)
    return labeling
