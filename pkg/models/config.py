# config.py
"""
Configuration dataclasses and the config-file loader.

Config files are read with `yaml.safe_load`, so plain JSON files work unchanged. Any field can be
overridden with a dotted key (`labeler.lambda`, `tracker.iou_min`, `profile.theta_fine`).
"""
import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional, Tuple, Union, get_args, get_origin

import yaml

from models.errors import InvalidConfig
from util.functions import NestedDict


class EdgeCost(Enum):
    EUC = "EUC"
    NC = "NC"


class Method(Enum):
    HSL = "HSL"
    HCSL = "HCSL"
    AVG = "AVG"
    NN1 = "1NN"
    TOPTEN = "TOPTEN"


class HistMetric(Enum):
    INTERSECTION = "intersection"
    CHI_SQUARE = "chi_square"


def parse_enum(enum_cls, value):
    if isinstance(value, enum_cls):
        return value
    for member in enum_cls:
        if str(value).lower() in (member.name.lower(), str(member.value).lower()):
            return member
    raise InvalidConfig(f"{value!r} is not one of {[m.value for m in enum_cls]}")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidConfig(message)


def _coerce(annotation, value):
    """Numbers YAML leaves as strings (`5e-1`, `-6e-1`) converted to the field's numeric type."""
    if get_origin(annotation) is tuple and isinstance(value, (list, tuple)):
        args = get_args(annotation)
        return type(value)(_coerce(args[0] if args[-1] is Ellipsis else args[min(i, len(args) - 1)], v)
                           for i, v in enumerate(value))
    if not isinstance(value, str):
        return value
    kinds = get_args(annotation) if get_origin(annotation) is Union else (annotation,)
    try:
        if float in kinds:
            return float(value)
        if int in kinds:
            number = float(value)
            return int(number) if number.is_integer() else value
    except ValueError:
        pass
    return value


class ConfigSection:
    """Mixin giving dataclass configs a strict `from_dict` and a plain `to_dict`."""

    # config-file key -> attribute name, for keys that are Python keywords
    aliases: dict = {}

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]):
        return cls._build(dict(data or {}))

    @classmethod
    def _build(cls, data: dict):
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            name = cls.aliases.get(key, key)
            if name not in types:
                raise InvalidConfig(f"unknown {cls.__name__} field {key!r}")
            kwargs[name] = _coerce(types[name], value)
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as e:
            raise InvalidConfig(f"{cls.__name__}: {e}") from e

    def to_dict(self) -> dict:
        reverse = {v: k for k, v in self.aliases.items()}
        result = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, ConfigSection):
                value = value.to_dict()
            elif isinstance(value, Enum):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            elif is_dataclass(value):
                value = asdict(value)
            result[reverse.get(f.name, f.name)] = value
        return result


@dataclass(frozen=True)
class TrackerConfig(ConfigSection):
    # Kept small: early termination (more tracks of one actor) is preferred over identity merges.
    desc_dist_max: float = 0.8
    iou_min: float = 0.0
    max_missed_frames: int = 10
    shot_hist_dist_max: float = 0.5
    hist_metric: HistMetric = HistMetric.INTERSECTION

    def __post_init__(self):
        object.__setattr__(self, "hist_metric", parse_enum(HistMetric, self.hist_metric))
        _require(self.desc_dist_max > 0, "tracker.desc_dist_max must be positive")
        _require(0.0 <= self.iou_min <= 1.0, "tracker.iou_min must lie in [0, 1]")
        _require(int(self.max_missed_frames) >= 1, "tracker.max_missed_frames must be a positive integer")
        _require(self.shot_hist_dist_max > 0, "tracker.shot_hist_dist_max must be positive")


@dataclass(frozen=True)
class ProfileConfig(ConfigSection):
    # Squared distances to a running-mean centroid; calibrated on the default synthetic scenario.
    theta_coarse: float = 0.7
    theta_fine: float = 0.35
    min_cluster_size: int = 5

    def __post_init__(self):
        _require(self.theta_fine > 0 and self.theta_coarse > 0, "profile thresholds must be positive")
        _require(self.theta_fine < self.theta_coarse, "profile.theta_fine must be below profile.theta_coarse")
        _require(int(self.min_cluster_size) >= 1, "profile.min_cluster_size must be a positive integer")


@dataclass(frozen=True)
class LabelerConfig(ConfigSection):
    aliases = {"lambda": "lambda_"}

    edge_cost: EdgeCost = EdgeCost.NC
    method: Method = Method.HSL
    lambda_: Optional[float] = None
    side_actor_threshold: Optional[float] = None
    topten_percentile: float = 0.10
    profile: ProfileConfig = field(default_factory=ProfileConfig)

    def __post_init__(self):
        object.__setattr__(self, "edge_cost", parse_enum(EdgeCost, self.edge_cost))
        object.__setattr__(self, "method", parse_enum(Method, self.method))
        if isinstance(self.profile, Mapping):
            object.__setattr__(self, "profile", ProfileConfig.from_dict(self.profile))
        _require(0.0 < self.topten_percentile <= 1.0, "labeler.topten_percentile must lie in (0, 1]")
        if self.method in (Method.HSL, Method.HCSL) and self.edge_cost is EdgeCost.EUC:
            _require(self.lambda_ is not None, "labeler.lambda is required for the EUC edge cost")

    @property
    def acceptance_threshold(self) -> float:
        """Algorithm threshold on the active edge cost; 0 for the mean-centred cost by default."""
        if self.lambda_ is None:
            return 0.0
        return float(self.lambda_)

    @property
    def side_cut(self) -> float:
        return math.inf if self.side_actor_threshold is None else float(self.side_actor_threshold)

    @property
    def variant(self) -> str:
        return f"{self.method.value}-{self.edge_cost.value}"


@dataclass(frozen=True)
class ScenarioConfig(ConfigSection):
    dim: int = 64
    n_actors: int = 5
    n_side: int = 0
    templates_per_actor: int = 18
    tracks_per_actor: int = 20
    tracks_per_side: int = 20
    faces_per_track_range: Tuple[int, int] = (5, 15)
    sigma_source: float = 0.05
    shift_magnitude: float = 2.0
    sigma_track: float = 0.08
    sigma_face: float = 0.05
    shift_spread: float = 0.0
    outlier_rate: float = 0.0
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "faces_per_track_range", tuple(int(v) for v in self.faces_per_track_range))
        _require(self.dim >= 2, "synth.dim must be at least 2")
        _require(self.n_actors >= 1, "synth.n_actors must be at least 1")
        _require(self.n_side >= 0, "synth.n_side must be non-negative")
        _require(self.templates_per_actor >= 1, "synth.templates_per_actor must be at least 1")
        _require(self.tracks_per_actor >= 0 and self.tracks_per_side >= 0, "track counts must be non-negative")
        low, high = self.faces_per_track_range
        _require(1 <= low <= high, "synth.faces_per_track_range must satisfy 1 <= min <= max")
        for name in ("sigma_source", "sigma_track", "sigma_face", "shift_magnitude"):
            _require(getattr(self, name) >= 0, f"synth.{name} must be non-negative")
        _require(0.0 <= self.shift_spread <= 1.0, "synth.shift_spread must lie in [0, 1]")
        _require(0.0 <= self.outlier_rate < 1.0, "synth.outlier_rate must lie in [0, 1)")
        _require(0 <= int(self.seed) < 2 ** 64, "synth.seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class StreamConfig(ConfigSection):
    n_shots: int = 40
    frames_per_shot: int = 20
    identities_per_shot: int = 3
    canvas: Tuple[int, int] = (1280, 720)
    box_size: int = 80
    drift: float = 2.0
    hist_bins: int = 32

    def __post_init__(self):
        object.__setattr__(self, "canvas", tuple(int(v) for v in self.canvas))
        _require(self.n_shots >= 1 and self.frames_per_shot >= 1, "stream needs at least one shot and frame")
        _require(self.identities_per_shot >= 1, "stream.identities_per_shot must be at least 1")
        lanes = self.canvas[0] // (2 * self.box_size)
        _require(self.identities_per_shot <= lanes,
                 f"stream.identities_per_shot exceeds the {lanes} lanes that fit on the canvas")
        _require(self.hist_bins >= 2, "stream.hist_bins must be at least 2")


@dataclass(frozen=True)
class PathsConfig(ConfigSection):
    workdir: str = "."
    templates: str = "templates"
    detections: str = "detections.jsonl"
    tracks: str = "tracks.jsonl"
    labels: str = "labels.csv"
    ground_truth: str = "ground_truth.csv"
    report: str = "report.json"
    profiles: str = "profiles.yaml"
    comparison: str = "comparison.json"
    sweep: str = "sweep.json"

    def resolve(self, name: str) -> Path:
        return Path(self.workdir) / getattr(self, name)


@dataclass(frozen=True)
class PipelineConfig(ConfigSection):
    dim: Optional[int] = None
    fps: float = 25.0
    segment_lengths: Tuple[float, ...] = (600.0, 1200.0, 1800.0)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    labeler: LabelerConfig = field(default_factory=LabelerConfig)
    synth: ScenarioConfig = field(default_factory=ScenarioConfig)
    stream: StreamConfig = field(default_factory=StreamConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    sections = {"tracker": TrackerConfig, "labeler": LabelerConfig, "synth": ScenarioConfig,
                "stream": StreamConfig, "paths": PathsConfig}

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]) -> "PipelineConfig":
        data = dict(data or {})
        profile = data.pop("profile", None)
        if profile is not None:
            labeler = dict(data.get("labeler") or {})
            labeler["profile"] = profile
            data["labeler"] = labeler
        for key, section in cls.sections.items():
            if key in data and not isinstance(data[key], section):
                data[key] = section.from_dict(data[key])
        if "segment_lengths" in data:
            data["segment_lengths"] = tuple(float(v) for v in data["segment_lengths"])
        config = cls._build(data)
        _require(config.fps > 0, "fps must be positive")
        _require(config.dim is None or config.dim >= 1, "dim must be positive")
        return config

    @property
    def profile(self) -> ProfileConfig:
        return self.labeler.profile

    def to_dict(self) -> dict:
        result = super().to_dict()
        result["profile"] = result["labeler"].pop("profile")
        return result

    def with_labeler(self, **changes) -> "PipelineConfig":
        return replace(self, labeler=replace(self.labeler, **changes))


def parse_override(text: str) -> Any:
    """Type a command-line override value the way the config file would."""
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def load_config(path: Union[str, Path, None] = None, overrides: Optional[Mapping[str, Any]] = None) -> PipelineConfig:
    raw = NestedDict()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as f:
                loaded = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise InvalidConfig(f"{path}: {e}") from e
        if not isinstance(loaded, dict):
            raise InvalidConfig(f"{path}: top level must be a mapping")
        raw.update(loaded)
    for key, value in (overrides or {}).items():
        raw.set_dotted(key, value)
    return PipelineConfig.from_dict(raw.to_plain())
