"""JSON-lines wire formats for detections, tracklets, and ground truth.

One record per line keeps memory bounded on 24/7 streams; readers are
generators and never buffer whole files. Lines starting with ``#`` are
header comments (the simulator echoes its seed in one). Parse failures raise
:class:`ParseError` carrying the 1-based line number.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Iterator

import numpy as np

from .errors import ParseError, ValidationError
from .metrics import GroundTruth
from .types import (
    BBox,
    Detection,
    EarTagClass,
    Observation,
    Tracklet,
    tag_class_from_name,
    validate_detection,
)


def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _iter_records(path: str | os.PathLike) -> Iterator[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            if not isinstance(obj, dict):
                raise ParseError("record is not a JSON object", line=line_no)
            yield line_no, obj


def _parse_box(raw: object, line_no: int) -> BBox:
    if not isinstance(raw, list) or len(raw) != 4:
        raise ParseError("box must be [x, y, w, h]", line=line_no)
    try:
        return BBox(*(float(v) for v in raw))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"box values not numeric: {exc}", line=line_no) from exc


# -- detections ------------------------------------------------------------


def detection_to_record(d: Detection) -> dict:
    return {
        "frame": d.frame,
        "box": d.box.as_list(),
        "conf": d.confidence,
        "emb": [float(v) for v in d.embedding],
        "tags": [float(v) for v in d.tag_scores],
    }


def detection_from_record(obj: dict, embedding_dim: int | None = None, line_no: int = 0) -> Detection:
    try:
        d = Detection(
            frame=int(obj["frame"]),
            box=_parse_box(obj["box"], line_no),
            confidence=float(obj["conf"]),
            embedding=np.array(obj["emb"], dtype=float),
            tag_scores=np.array(obj["tags"], dtype=float),
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad detection record: {exc}", line=line_no) from exc
    try:
        validate_detection(d, embedding_dim)
    except ValidationError as exc:
        raise ParseError(str(exc), line=line_no) from exc
    return d


def write_detections(path: str | os.PathLike, detections: Iterable[Detection], header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as f:
        if header:
            f.write(f"# {header}\n")
        for d in detections:
            f.write(_dump(detection_to_record(d)) + "\n")


def iter_detections(path: str | os.PathLike, embedding_dim: int | None = None) -> Iterator[Detection]:
    """Stream detections off disk, enforcing non-decreasing frame indices."""
    last_frame = None
    for line_no, obj in _iter_records(path):
        d = detection_from_record(obj, embedding_dim, line_no)
        if last_frame is not None and d.frame < last_frame:
            raise ParseError(
                f"frame {d.frame} decreases after {last_frame}", line=line_no
            )
        last_frame = d.frame
        yield d


def group_frames(detections: Iterable[Detection]) -> Iterator[tuple[int, list[Detection]]]:
    """Batch an ordered detection stream into per-frame groups."""
    frame: int | None = None
    batch: list[Detection] = []
    for d in detections:
        if frame is None or d.frame == frame:
            batch.append(d)
            frame = d.frame
        else:
            yield frame, batch
            frame, batch = d.frame, [d]
    if batch:
        yield frame, batch


# -- tracklets --------------------------------------------------------------


def tracklet_to_record(t: Tracklet, identity: EarTagClass | None) -> dict:
    return {
        "tracklet_id": t.id,
        "identity": identity.value if identity is not None else None,
        "start": t.start_frame,
        "end": t.end_frame,
        "obs": [
            {
                "frame": o.frame,
                "box": o.box.as_list(),
                "tags": [float(v) for v in o.tag_scores],
                "conf": o.conf,
            }
            for o in t.observations
        ],
    }


def tracklet_from_record(obj: dict, line_no: int = 0) -> tuple[Tracklet, EarTagClass | None]:
    try:
        tid = int(obj["tracklet_id"])
        raw_identity = obj.get("identity")
        obs = [
            Observation(
                frame=int(o["frame"]),
                box=_parse_box(o["box"], line_no),
                tag_scores=np.array(o["tags"], dtype=float),
                conf=float(o.get("conf", 1.0)),
            )
            for o in obj["obs"]
        ]
        start, end = int(obj["start"]), int(obj["end"])
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad tracklet record: {exc}", line=line_no) from exc
    if not obs:
        raise ParseError("tracklet has no observations", line=line_no)
    t = Tracklet.from_observations(tid, obs)
    if (t.start_frame, t.end_frame) != (start, end):
        raise ParseError(
            f"start/end {start}-{end} disagree with observations {t.start_frame}-{t.end_frame}",
            line=line_no,
        )
    identity = None
    if raw_identity is not None:
        try:
            identity = tag_class_from_name(str(raw_identity))
        except ValidationError as exc:
            raise ParseError(str(exc), line=line_no) from exc
        if not identity.identity_bearing:
            raise ParseError(f"{identity.value} is not an identity-bearing class", line=line_no)
    try:
        t.validate()
    except ValidationError as exc:
        raise ParseError(str(exc), line=line_no) from exc
    return t, identity


def write_tracklets(
    path: str | os.PathLike,
    tracklets: Iterable[Tracklet],
    identity_map: dict[int, EarTagClass | None] | None = None,
    header: str | None = None,
) -> None:
    identity_map = identity_map or {}
    with open(path, "w", encoding="utf-8") as f:
        if header:
            f.write(f"# {header}\n")
        for t in tracklets:
            f.write(_dump(tracklet_to_record(t, identity_map.get(t.id))) + "\n")


def read_tracklets(path: str | os.PathLike) -> tuple[list[Tracklet], dict[int, EarTagClass | None]]:
    tracklets: list[Tracklet] = []
    identities: dict[int, EarTagClass | None] = {}
    for line_no, obj in _iter_records(path):
        t, identity = tracklet_from_record(obj, line_no)
        if t.id in identities:
            raise ParseError(f"duplicate tracklet id {t.id}", line=line_no)
        tracklets.append(t)
        identities[t.id] = identity
    return tracklets, identities


# -- ground truth ------------------------------------------------------------


def write_ground_truth(path: str | os.PathLike, gt: GroundTruth, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as f:
        if header:
            f.write(f"# {header}\n")
        for frame in sorted(gt.frames):
            for e in gt.frames[frame]:
                record = {
                    "frame": frame,
                    "gt_id": e.gt_id,
                    "box": e.box.as_list(),
                    "identity": e.identity.value if e.identity is not None else None,
                }
                f.write(_dump(record) + "\n")


def read_ground_truth(path: str | os.PathLike) -> GroundTruth:
    entries = []
    for line_no, obj in _iter_records(path):
        try:
            frame = int(obj["frame"])
            gt_id = int(obj["gt_id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad ground-truth record: {exc}", line=line_no) from exc
        box = _parse_box(obj.get("box"), line_no)
        raw_identity = obj.get("identity")
        identity = None
        if raw_identity is not None:
            try:
                identity = tag_class_from_name(str(raw_identity))
            except ValidationError as exc:
                raise ParseError(str(exc), line=line_no) from exc
        entries.append((frame, gt_id, box, identity))
    try:
        return GroundTruth.from_entries(entries)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
