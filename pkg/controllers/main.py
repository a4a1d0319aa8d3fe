# main.py
import argparse
import logging
from typing import Dict, List, Optional, Sequence

from controllers.pipeline import SYNTH_MODES, ControllerPipeline
from models.config import Method, PipelineConfig, load_config, parse_override
from models.errors import InvalidConfig, StageError, ValidationError
from models.evaluation import compare_methods, score, segment_sweep, track_ground_truth
from models.files import (load_detections, load_ground_truth, load_labels, load_templates, load_tracks, save_detections,
                          save_ground_truth, save_json, save_labels, save_profiles, save_report, save_templates,
                          save_tracks)
from models.labeler import run_labeler
from models.synth import generate, generate_stream
from models.tracker import run_tracker
from util.logs import configure_logging
from views.report import ReportView

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidConfig(message)


def split_overrides(tokens: Sequence[str]) -> Dict[str, object]:
    """`--section.field value` and `--section.field=value` pairs left over by argparse; top-level keys need no section."""
    overrides = {}
    tokens = list(tokens)
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith("--") or len(token) == 2:
            raise InvalidConfig(f"unrecognized argument {token!r}")
        key, sep, value = token[2:].partition("=")
        if not sep:
            if i + 1 >= len(tokens):
                raise InvalidConfig(f"override {token} needs a value")
            i += 1
            value = tokens[i]
        overrides[key] = parse_override(value)
        i += 1
    return overrides


class ControllerMain:
    def __init__(self, view: Optional[ReportView] = None):
        self.view = view or ReportView()
        self.parser = self._build_parser()
        self.cfg: Optional[PipelineConfig] = None

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        try:
            args, rest = self.parser.parse_known_args(argv)
            configure_logging(args.verbose)
            self.cfg = load_config(args.config, split_overrides(rest))
            args.handler(args)
        except StageError as e:
            log.error("%s", e)
            return EXIT_VALIDATION if e.is_validation else EXIT_RUNTIME
        except ValidationError as e:
            log.error("%s", e)
            return EXIT_VALIDATION
        except Exception as e:
            log.exception("Unexpected failure: %s", e)
            return EXIT_RUNTIME
        return EXIT_OK

    # region Commands
    def synth(self, args) -> None:
        paths = self.cfg.paths
        if args.mode == "stream":
            scenario = generate_stream(self.cfg.synth, self.cfg.stream)
            save_detections(paths.resolve('detections'), scenario.frames)
            log.info("Wrote %d detections in %d frames", scenario.detection_count, len(scenario.frames))
        else:
            scenario = generate(self.cfg.synth)
            save_tracks(paths.resolve('tracks'), scenario.tracks)
            save_ground_truth(paths.resolve('ground_truth'), scenario.ground_truth)
            log.info("Wrote %d tracks", len(scenario.tracks))
        save_templates(paths.resolve('templates'), scenario.templates)

    def track(self, args) -> None:
        paths = self.cfg.paths
        frames = load_detections(paths.resolve('detections'), self.cfg.dim)
        tracks = run_tracker(frames, self.cfg.tracker, self.cfg.dim)
        save_tracks(paths.resolve('tracks'), tracks)
        actors = None
        if paths.resolve('templates').is_dir():
            actors = [c.name for c in load_templates(paths.resolve('templates'), self.cfg.dim)]
        truth = track_ground_truth(tracks, actors)
        if truth and len(truth) == len(tracks):
            save_ground_truth(paths.resolve('ground_truth'), truth)

    def label(self, args) -> None:
        paths = self.cfg.paths
        clouds = load_templates(paths.resolve('templates'), self.cfg.dim)
        tracks = load_tracks(paths.resolve('tracks'), self.cfg.dim)
        labeling = run_labeler(tracks, clouds, self.cfg.labeler)
        save_labels(paths.resolve('labels'), labeling)
        if self.cfg.labeler.method is Method.HCSL:
            save_profiles(paths.resolve('profiles'), labeling.clouds)
        self.view.show_labeling(labeling)

    def evaluate(self, args) -> None:
        paths = self.cfg.paths
        entries = load_labels(paths.resolve('labels'))
        report = score({track_id: e.label for track_id, e in entries.items()},
                       load_ground_truth(paths.resolve('ground_truth')))
        save_report(paths.resolve('report'), report)
        self.view.show_report(report)

    def pipeline(self, args) -> None:
        controller = ControllerPipeline(self.cfg, synth=args.synth).run()
        if controller.report is not None:
            self.view.show_report(controller.report)
        else:
            self.view.show_labeling(controller.labeling)

    def sweep(self, args) -> None:
        paths = self.cfg.paths
        clouds = load_templates(paths.resolve('templates'), self.cfg.dim)
        tracks = load_tracks(paths.resolve('tracks'), self.cfg.dim)
        truth = load_ground_truth(paths.resolve('ground_truth'))
        results = segment_sweep(tracks, clouds, self.cfg.labeler, truth, self.cfg.segment_lengths, self.cfg.fps)
        save_json(paths.resolve('sweep'), [{"length_seconds": length, "report": report.to_dict()}
                                           for length, report in results])
        self.view.show_sweep(results, self.cfg.fps)

    def compare(self, args) -> None:
        paths = self.cfg.paths
        clouds = load_templates(paths.resolve('templates'), self.cfg.dim)
        tracks = load_tracks(paths.resolve('tracks'), self.cfg.dim)
        truth = load_ground_truth(paths.resolve('ground_truth'))
        comparison = compare_methods(tracks, clouds, self.cfg.labeler, truth, euc_lambda=args.euc_lambda)
        save_json(paths.resolve('comparison'), comparison.to_dict())
        self.view.show_comparison(comparison)
    # endregion

    def _build_parser(self) -> argparse.ArgumentParser:
        parser = _ArgumentParser(prog="castmatch", description="Label face tracks with actor identities.")
        parser.add_argument("--config", help="YAML or JSON config file")
        parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug output")
        commands = parser.add_subparsers(dest="command", required=True)

        synth = commands.add_parser("synth", help="write a synthetic scenario")
        synth.add_argument("--mode", choices=SYNTH_MODES, default="tracks")
        synth.set_defaults(handler=self.synth)

        commands.add_parser("track", help="chain detections into tracks").set_defaults(handler=self.track)
        commands.add_parser("label", help="label tracks against actor templates").set_defaults(handler=self.label)
        commands.add_parser("eval", help="score labels against ground truth").set_defaults(handler=self.evaluate)

        pipeline = commands.add_parser("pipeline", help="run every stage")
        pipeline.add_argument("--synth", choices=SYNTH_MODES, default=None, help="start from a synthetic scenario")
        pipeline.set_defaults(handler=self.pipeline)

        commands.add_parser("sweep", help="accuracy on growing video prefixes").set_defaults(handler=self.sweep)

        compare = commands.add_parser("compare", help="run every labelling method")
        compare.add_argument("--euc-lambda", type=float, default=None,
                             help="acceptance threshold for self-labelling with the EUC cost")
        compare.set_defaults(handler=self.compare)
        return parser


def main(argv: Optional[List[str]] = None) -> int:
    return ControllerMain().run(argv)
