# files.py
"""
Readers and writers for every file the pipeline exchanges.

All files are UTF-8 and line oriented: JSON-lines for descriptors, CSV for labels and ground
truth, JSON for reports and YAML for profile dumps. Floats are written with `repr`, which
round-trips float64 exactly. Loader errors name the offending line.
"""
import csv
import json
import logging
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from models.errors import DimensionMismatch, EmptyActorFile, ParseError, ValidationError, ZeroVector
from models.evaluation import EvalReport
from models.labeler import ActorCloud, LabelEntry, Labeling
from models.tracker import Detection, FrameDetections, Track
from models.vectors import l2_normalize

log = logging.getLogger(__name__)

PathLike = Union[str, Path]

LABEL_COLUMNS = ("track_id", "label", "cost", "iteration")
TRUTH_COLUMNS = ("track_id", "label")


def _json_lines(path: PathLike) -> Iterator[Tuple[int, dict]]:
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(path, number, f"invalid JSON ({e.msg})") from e
            if not isinstance(record, dict):
                raise ParseError(path, number, "expected a JSON object")
            yield number, record


def _field(record: dict, key: str, path: PathLike, line: int):
    if key not in record:
        raise ParseError(path, line, f"missing field {key!r}")
    return record[key]


def _descriptor(values, path: PathLike, line: int, dim: Optional[int]) -> np.ndarray:
    try:
        vector = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ParseError(path, line, "descriptor must be a list of numbers") from e
    if vector.ndim != 1 or vector.size == 0:
        raise ParseError(path, line, "descriptor must be a non-empty flat list")
    if not np.all(np.isfinite(vector)):
        raise ParseError(path, line, "descriptor has non-finite values")
    if dim is not None and vector.shape[0] != dim:
        raise DimensionMismatch(dim, vector.shape[0], what=f"descriptor at {path}:{line}")
    try:
        return l2_normalize(vector)
    except ZeroVector as e:
        raise ParseError(path, line, "descriptor has zero norm") from e


def _write_lines(path: PathLike, records) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(json.dumps(record) + "\n")


def _floats(vector) -> List[float]:
    return [float(v) for v in vector]


# region Templates

def load_templates(directory: PathLike, dim: Optional[int] = None) -> List[ActorCloud]:
    """One cloud per `<actor>.jsonl` file, in file-name order."""
    directory = Path(directory)
    files = sorted(directory.glob("*.jsonl"))
    if not files:
        raise ValidationError(f"no actor template files in {directory}")
    clouds = []
    for path in files:
        faces = []
        for line, record in _json_lines(path):
            face = _descriptor(_field(record, "descriptor", path, line), path, line, dim)
            dim = face.shape[0]
            faces.append(face)
        if not faces:
            raise EmptyActorFile(f"{path} holds no descriptors")
        clouds.append(ActorCloud(path.stem, np.stack(faces)))
    log.info("Loaded %d actors from %s", len(clouds), directory)
    return clouds


def save_templates(directory: PathLike, templates: Mapping[str, np.ndarray]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for actor, faces in templates.items():
        _write_lines(directory / f"{actor}.jsonl", ({"descriptor": _floats(face)} for face in faces))

# endregion Templates


# region Detections

def load_detections(path: PathLike, dim: Optional[int] = None) -> List[FrameDetections]:
    """
    Detections grouped per frame. Lines must come in non-decreasing frame order. A frame counts as a
    shot boundary when any of its lines says so, and as not a boundary when lines only say false.
    """
    frames: List[FrameDetections] = []
    for line, record in _json_lines(path):
        frame = _field(record, "frame", path, line)
        if not isinstance(frame, int) or isinstance(frame, bool) or frame < 0:
            raise ParseError(path, line, f"frame must be a non-negative integer, got {frame!r}")
        bbox = _field(record, "bbox", path, line)
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise ParseError(path, line, "bbox must be [x, y, w, h]")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox):
            raise ParseError(path, line, "bbox values must be numbers")
        if not bbox[2] > 0 or not bbox[3] > 0:
            raise ParseError(path, line, f"bbox {bbox} has non-positive size")
        descriptor = _descriptor(_field(record, "descriptor", path, line), path, line, dim)
        dim = descriptor.shape[0]
        hist = record.get("hist")
        if hist is not None:
            hist = np.asarray(hist, dtype=np.float64)
            if hist.ndim != 1 or hist.sum() <= 0 or np.any(hist < 0):
                raise ParseError(path, line, "hist must be a non-negative list with positive mass")
        boundary = record.get("shot_boundary")
        if boundary is not None and not isinstance(boundary, bool):
            raise ParseError(path, line, "shot_boundary must be true or false")

        if frames and frame < frames[-1].frame:
            raise ParseError(path, line, f"frame {frame} comes after frame {frames[-1].frame}")
        if not frames or frame != frames[-1].frame:
            frames.append(FrameDetections(frame))
        current = frames[-1]
        current.detections.append(Detection(frame, tuple(float(v) for v in bbox), descriptor, hist, boundary,
                                            record.get("identity")))
        if boundary is not None:
            current.shot_boundary = bool(current.shot_boundary) or boundary
    return frames


def save_detections(path: PathLike, frames: Sequence[FrameDetections]) -> None:
    def records():
        for frame in frames:
            for d in frame.detections:
                record = {"frame": d.frame, "bbox": _floats(d.bbox), "descriptor": _floats(d.descriptor)}
                if d.hist is not None:
                    record["hist"] = _floats(d.hist)
                if d.shot_boundary is not None:
                    record["shot_boundary"] = d.shot_boundary
                if d.identity is not None:
                    record["identity"] = d.identity
                yield record
    _write_lines(path, records())

# endregion Detections


# region Tracks

def load_tracks(path: PathLike, dim: Optional[int] = None) -> List[Track]:
    tracks = []
    seen = set()
    for line, record in _json_lines(path):
        track_id = _field(record, "track_id", path, line)
        if not isinstance(track_id, int) or isinstance(track_id, bool) or track_id < 0:
            raise ParseError(path, line, f"track_id must be a non-negative integer, got {track_id!r}")
        if track_id in seen:
            raise ParseError(path, line, f"duplicate track_id {track_id}")
        seen.add(track_id)
        descriptors = _field(record, "descriptors", path, line)
        if not isinstance(descriptors, list) or not descriptors:
            raise ParseError(path, line, f"track {track_id} has no descriptors")
        faces = []
        for values in descriptors:
            faces.append(_descriptor(values, path, line, dim))
            dim = faces[-1].shape[0]
        try:
            tracks.append(Track(track_id, np.stack(faces), _field(record, "frames", path, line),
                                identities=tuple(record["identities"]) if record.get("identities") else None))
        except (ValidationError, TypeError, ValueError) as e:
            raise ParseError(path, line, str(e)) from e
    return tracks


def save_tracks(path: PathLike, tracks: Sequence[Track]) -> None:
    def records():
        for t in tracks:
            record = {"track_id": t.id, "frames": list(t.frames), "descriptors": [_floats(f) for f in t.faces]}
            if t.identities:
                record["identities"] = list(t.identities)
            yield record
    _write_lines(path, records())

# endregion Tracks


# region Labels and ground truth

def _csv_rows(path: PathLike, columns: Sequence[str]) -> Iterator[Tuple[int, dict]]:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != tuple(columns):
            raise ParseError(path, 1, f"header must be {','.join(columns)}")
        for row in reader:
            if None in row or any(row[c] is None for c in columns):
                raise ParseError(path, reader.line_num, f"expected {len(columns)} columns")
            yield reader.line_num, row


def _track_id(text: str, path: PathLike, line: int) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise ParseError(path, line, f"track_id {text!r} is not an integer") from e
    if value < 0:
        raise ParseError(path, line, f"track_id {value} is negative")
    return value


def save_labels(path: PathLike, labeling: Labeling) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(LABEL_COLUMNS)
        for track_id in sorted(labeling.entries):
            entry = labeling.entries[track_id]
            iteration = "" if entry.iteration is None else entry.iteration
            writer.writerow((track_id, entry.label, repr(float(entry.cost)), iteration))


def load_labels(path: PathLike) -> Dict[int, LabelEntry]:
    entries = {}
    for line, row in _csv_rows(path, LABEL_COLUMNS):
        track_id = _track_id(row["track_id"], path, line)
        if track_id in entries:
            raise ParseError(path, line, f"duplicate track_id {track_id}")
        try:
            cost = float(row["cost"])
            iteration = int(row["iteration"]) if row["iteration"] != "" else None
        except ValueError as e:
            raise ParseError(path, line, str(e)) from e
        entries[track_id] = LabelEntry(row["label"], cost, iteration)
    return entries


def save_ground_truth(path: PathLike, truth: Mapping[int, str]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRUTH_COLUMNS)
        for track_id in sorted(truth):
            writer.writerow((track_id, truth[track_id]))


def load_ground_truth(path: PathLike) -> Dict[int, str]:
    truth = {}
    for line, row in _csv_rows(path, TRUTH_COLUMNS):
        track_id = _track_id(row["track_id"], path, line)
        if track_id in truth:
            raise ParseError(path, line, f"duplicate track_id {track_id}")
        if not row["label"]:
            raise ParseError(path, line, "empty label")
        truth[track_id] = row["label"]
    return truth

# endregion Labels and ground truth


# region Reports

def save_json(path: PathLike, data) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
        f.write("\n")


def save_report(path: PathLike, report: EvalReport) -> None:
    save_json(path, report.to_dict())


def save_profiles(path: PathLike, clouds: Sequence[ActorCloud]) -> None:
    """YAML dump of every actor profile: clusters, sub-cluster sizes and representative vectors."""
    dump = [cloud.profile.to_dict() for cloud in clouds if cloud.profile is not None]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump({"profiles": dump}, f, sort_keys=False)

# endregion Reports
