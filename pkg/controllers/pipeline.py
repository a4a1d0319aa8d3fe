# pipeline.py
import logging
from enum import Enum
from typing import Callable, Dict, List, Optional

from models.config import Method, PipelineConfig
from models.errors import StageError
from models.evaluation import EvalReport, score, track_ground_truth
from models.files import (load_detections, load_ground_truth, load_templates, load_tracks, save_detections,
                          save_ground_truth, save_labels, save_profiles, save_report, save_templates, save_tracks)
from models.labeler import ActorCloud, Labeling, run_labeler
from models.synth import generate, generate_stream
from models.tracker import FrameDetections, Track, run_tracker

log = logging.getLogger(__name__)

SYNTH_MODES = ("tracks", "stream")


class Stage(Enum):
    SYNTHESIZING = "synthesizing"
    TRACKING = "tracking"
    LABELING = "labeling"
    EVALUATING = "evaluating"


class ControllerPipeline:
    """
    Runs synth -> track -> label -> eval.

    Synthesis is optional. Tracking runs when detections are available (synthesised or on disk),
    otherwise tracks are read from disk. Evaluation runs when ground truth is available.

    :param synth: None to read inputs from the configured paths, or one of SYNTH_MODES.
    :param persist: write every stage's output to the configured paths.
    """

    def __init__(self, cfg: PipelineConfig, synth: Optional[str] = None, persist: bool = True):
        if synth is not None and synth not in SYNTH_MODES:
            raise ValueError(f"synth mode must be one of {SYNTH_MODES}")
        self.cfg = cfg
        self.synth = synth
        self.persist = persist
        self.frames: Optional[List[FrameDetections]] = None
        self.tracks: Optional[List[Track]] = None
        self.clouds: Optional[List[ActorCloud]] = None
        self.ground_truth: Optional[Dict[int, str]] = None
        self.labeling: Optional[Labeling] = None
        self.report: Optional[EvalReport] = None
        self.stages: List[str] = []

    def run(self) -> "ControllerPipeline":
        """
        Run every applicable stage in order.

        :raises StageError: naming the stage that failed; the original exception is its `cause`.
        """
        if self.synth is not None:
            self._run_stage(Stage.SYNTHESIZING, self.synthesize)
        if self.frames is not None or (self.synth is None and self.cfg.paths.resolve('detections').exists()):
            self._run_stage(Stage.TRACKING, self.track)
        self._run_stage(Stage.LABELING, self.label)
        if self.ground_truth is not None:
            self._run_stage(Stage.EVALUATING, self.evaluate)
        return self

    def _run_stage(self, stage: Stage, action: Callable[[], None]) -> None:
        self.stages.append(stage.name)
        log.info("[%s] Entered %s", self.__class__.__name__, stage.name)
        try:
            action()
        except Exception as e:
            log.debug("[%s] Pipeline stopped in %s", self.__class__.__name__, stage.name)
            raise StageError(stage.name, e) from e

    # region Stages
    def synthesize(self):
        paths = self.cfg.paths
        if self.synth == "stream":
            scenario = generate_stream(self.cfg.synth, self.cfg.stream)
            self.frames = scenario.frames
            if self.persist:
                save_detections(paths.resolve('detections'), self.frames)
        else:
            scenario = generate(self.cfg.synth)
            self.tracks = scenario.tracks
            self.ground_truth = scenario.ground_truth
            if self.persist:
                save_tracks(paths.resolve('tracks'), self.tracks)
                save_ground_truth(paths.resolve('ground_truth'), self.ground_truth)
        self.clouds = scenario.clouds()
        if self.persist:
            save_templates(paths.resolve('templates'), scenario.templates)

    def track(self):
        paths = self.cfg.paths
        if self.frames is None:
            self.frames = load_detections(paths.resolve('detections'), self.cfg.dim)
        self.tracks = run_tracker(self.frames, self.cfg.tracker, self.cfg.dim)
        actors = [c.name for c in self._clouds()]
        truth = track_ground_truth(self.tracks, actors)
        if truth and len(truth) == len(self.tracks):
            self.ground_truth = truth
        if self.persist:
            save_tracks(paths.resolve('tracks'), self.tracks)
            if self.ground_truth is not None:
                save_ground_truth(paths.resolve('ground_truth'), self.ground_truth)

    def label(self):
        paths = self.cfg.paths
        if self.tracks is None:
            self.tracks = load_tracks(paths.resolve('tracks'), self.cfg.dim)
        self.labeling = run_labeler(self.tracks, self._clouds(), self.cfg.labeler)
        if self.persist:
            save_labels(paths.resolve('labels'), self.labeling)
            if self.cfg.labeler.method is Method.HCSL:
                save_profiles(paths.resolve('profiles'), self.labeling.clouds)
        if self.ground_truth is None and paths.resolve('ground_truth').exists() and self.synth is None:
            self.ground_truth = load_ground_truth(paths.resolve('ground_truth'))

    def evaluate(self):
        self.report = score(self.labeling, self.ground_truth, actors=[c.name for c in self.clouds])
        if self.persist:
            save_report(self.cfg.paths.resolve('report'), self.report)
    # endregion

    def _clouds(self) -> List[ActorCloud]:
        if self.clouds is None:
            self.clouds = load_templates(self.cfg.paths.resolve('templates'), self.cfg.dim)
        return self.clouds
