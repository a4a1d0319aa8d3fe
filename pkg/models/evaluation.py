# evaluation.py
"""
Track-level scoring of labelings, the growing-segment experiment and the method comparison grid.
"""
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from models.config import EdgeCost, LabelerConfig, Method
from models.errors import KeyMismatch
from models.labeler import SIDE_ACTOR, ActorCloud, Labeling, run_labeler
from models.tracker import Track
from util.threads import worker_count

log = logging.getLogger(__name__)

Variant = Tuple[Method, EdgeCost]

DEFAULT_VARIANTS: Tuple[Variant, ...] = (
    (Method.NN1, EdgeCost.EUC),
    (Method.AVG, EdgeCost.EUC),
    (Method.TOPTEN, EdgeCost.EUC),
    (Method.TOPTEN, EdgeCost.NC),
    (Method.HSL, EdgeCost.EUC),
    (Method.HSL, EdgeCost.NC),
    (Method.HCSL, EdgeCost.NC),
)


@dataclass(frozen=True)
class LabelScore:
    recall: float
    track_count: int
    share: float


@dataclass(eq=False)
class EvalReport:
    overall_accuracy: float
    per_actor: Dict[str, LabelScore]
    confusion: np.ndarray
    labels: List[str]
    n_tracks: int
    variant: str = ""
    runtime_seconds: Optional[float] = None

    @property
    def empty(self) -> bool:
        return self.n_tracks == 0

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "n_tracks": self.n_tracks,
            "empty": self.empty,
            "overall_accuracy": self.overall_accuracy,
            "runtime_seconds": self.runtime_seconds,
            "labels": list(self.labels),
            "per_actor": {label: {"recall": s.recall, "track_count": s.track_count, "share": s.share}
                          for label, s in self.per_actor.items()},
            "confusion": self.confusion.astype(int).tolist(),
        }


def _label_order(*groups: Iterable[str]) -> List[str]:
    actors = sorted({label for group in groups for label in group if label != SIDE_ACTOR})
    return actors + [SIDE_ACTOR]


def score(pred: Union[Labeling, Mapping[int, str]], gt: Mapping[int, str],
          actors: Optional[Sequence[str]] = None) -> EvalReport:
    """
    Compare predicted and true track labels.

    :param actors: actor names that must appear in the report even without tracks.
    """
    predicted = pred.labels() if isinstance(pred, Labeling) else dict(pred)
    missing = set(gt) - set(predicted)
    extra = set(predicted) - set(gt)
    if missing or extra:
        raise KeyMismatch(missing, extra)

    labels = _label_order(actors or (), gt.values(), predicted.values())
    index = {label: i for i, label in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for track_id, truth in gt.items():
        confusion[index[truth], index[predicted[track_id]]] += 1

    n_tracks = len(gt)
    per_actor = {}
    for label, i in index.items():
        count = int(confusion[i].sum())
        per_actor[label] = LabelScore(
            recall=float(confusion[i, i] / count) if count else 0.0,
            track_count=count,
            share=count / n_tracks if n_tracks else 0.0,
        )
    accuracy = float(np.trace(confusion) / n_tracks) if n_tracks else 0.0
    report = EvalReport(accuracy, per_actor, confusion, labels, n_tracks)
    if isinstance(pred, Labeling):
        report.variant = pred.variant
        report.runtime_seconds = pred.runtime_seconds
    return report


def track_ground_truth(tracks: Iterable[Track], actors: Optional[Iterable[str]] = None) -> Dict[int, str]:
    """
    Majority identity tag per track (ties: smallest tag). Untagged tracks are skipped; when
    `actors` is given, tags of other identities become SIDE_ACTOR.
    """
    known = set(actors) if actors is not None else None
    truth = {}
    for track in tracks:
        counts = Counter(i for i in (track.identities or ()) if i is not None)
        if not counts:
            continue
        best = max(counts.values())
        tag = min(label for label, n in counts.items() if n == best)
        truth[track.id] = tag if known is None or tag in known else SIDE_ACTOR
    return truth


def _run_and_score(tracks, clouds, cfg: LabelerConfig, gt: Mapping[int, str]) -> EvalReport:
    labeling = run_labeler(tracks, clouds, cfg)
    subset = {t.id: gt[t.id] for t in tracks}
    return score(labeling, subset, actors=[c.name for c in clouds])


def segment_sweep(tracks: Sequence[Track], clouds: Sequence[ActorCloud], cfg: LabelerConfig, gt: Mapping[int, str],
                  segment_lengths: Sequence[float], fps: float) -> List[Tuple[float, EvalReport]]:
    """One labelling run per video prefix; a track belongs to a prefix when it starts inside it."""
    missing = {t.id for t in tracks} - set(gt)
    if missing:
        raise KeyMismatch(missing, ())

    def run(length: float) -> Tuple[float, EvalReport]:
        prefix = [t for t in tracks if t.first_frame < length * fps]
        report = _run_and_score(prefix, clouds, cfg, gt)
        log.info("Segment %.0fs: %d tracks, accuracy %.3f", length, report.n_tracks, report.overall_accuracy)
        return length, report

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(run, segment_lengths))


def variant_config(cfg: LabelerConfig, method: Method, edge_cost: EdgeCost,
                   euc_lambda: Optional[float] = None) -> Optional[LabelerConfig]:
    """`cfg` switched to another method and edge cost, or None if no threshold fits the variant."""
    if edge_cost is cfg.edge_cost:
        lambda_ = cfg.lambda_
    else:
        lambda_ = euc_lambda if edge_cost is EdgeCost.EUC else None
    if method in (Method.HSL, Method.HCSL) and edge_cost is EdgeCost.EUC and lambda_ is None:
        return None
    return replace(cfg, method=method, edge_cost=edge_cost, lambda_=lambda_)


@dataclass(eq=False)
class Comparison:
    reports: Dict[str, EvalReport] = field(default_factory=dict)
    skipped: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"variants": {name: report.to_dict() for name, report in self.reports.items()},
                "skipped": list(self.skipped)}


def compare_methods(tracks: Sequence[Track], clouds: Sequence[ActorCloud], cfg: LabelerConfig, gt: Mapping[int, str],
                    variants: Sequence[Variant] = DEFAULT_VARIANTS, euc_lambda: Optional[float] = None) -> Comparison:
    comparison = Comparison()
    configs = []
    for method, edge_cost in variants:
        variant_cfg = variant_config(cfg, method, edge_cost, euc_lambda)
        if variant_cfg is None:
            name = f"{method.value}-{edge_cost.value}"
            log.warning("Skipping %s: no EUC acceptance threshold configured", name)
            comparison.skipped.append(name)
        else:
            configs.append(variant_cfg)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        reports = list(pool.map(lambda c: _run_and_score(tracks, clouds, c, gt), configs))
    for variant_cfg, report in zip(configs, reports):
        comparison.reports[variant_cfg.variant] = report
    return comparison
