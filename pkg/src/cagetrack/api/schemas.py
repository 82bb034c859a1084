"""Pydantic request/response models for the HTTP service.

Field names mirror the JSONL wire formats so a file line and a payload
element are interchangeable.
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, Field

from ..metrics import EvalReport, GroundTruth
from ..types import BBox, Detection, EarTagClass, Observation, Tracklet, tag_class_from_name


class DetectionModel(BaseModel):
    frame: int
    box: list[float] = Field(min_length=4, max_length=4)
    conf: float
    emb: list[float]
    tags: list[float] = Field(min_length=5, max_length=5)

    def to_domain(self) -> Detection:
        return Detection(
            frame=self.frame,
            box=BBox(*self.box),
            confidence=self.conf,
            embedding=np.array(self.emb, dtype=float),
            tag_scores=np.array(self.tags, dtype=float),
        )

    @classmethod
    def from_domain(cls, d: Detection) -> "DetectionModel":
        return cls(
            frame=d.frame,
            box=d.box.as_list(),
            conf=d.confidence,
            emb=[float(v) for v in d.embedding],
            tags=[float(v) for v in d.tag_scores],
        )


class ObservationModel(BaseModel):
    frame: int
    box: list[float] = Field(min_length=4, max_length=4)
    tags: list[float] = Field(min_length=5, max_length=5)
    conf: float = 1.0


class TrackletModel(BaseModel):
    tracklet_id: int
    identity: str | None = None
    start: int
    end: int
    obs: list[ObservationModel]

    def to_domain(self) -> tuple[Tracklet, EarTagClass | None]:
        observations = [
            Observation(o.frame, BBox(*o.box), np.array(o.tags, dtype=float), o.conf)
            for o in self.obs
        ]
        t = Tracklet.from_observations(self.tracklet_id, observations)
        identity = tag_class_from_name(self.identity) if self.identity is not None else None
        return t, identity

    @classmethod
    def from_domain(cls, t: Tracklet, identity: EarTagClass | None) -> "TrackletModel":
        return cls(
            tracklet_id=t.id,
            identity=identity.value if identity is not None else None,
            start=t.start_frame,
            end=t.end_frame,
            obs=[
                ObservationModel(
                    frame=o.frame,
                    box=o.box.as_list(),
                    tags=[float(v) for v in o.tag_scores],
                    conf=o.conf,
                )
                for o in t.observations
            ],
        )


class GroundTruthEntryModel(BaseModel):
    frame: int
    gt_id: int
    box: list[float] = Field(min_length=4, max_length=4)
    identity: str | None = None


def ground_truth_to_domain(entries: list[GroundTruthEntryModel]) -> GroundTruth:
    return GroundTruth.from_entries(
        (
            e.frame,
            e.gt_id,
            BBox(*e.box),
            tag_class_from_name(e.identity) if e.identity is not None else None,
        )
        for e in entries
    )


class TrackRequest(BaseModel):
    detections: list[DetectionModel]
    config: dict[str, float | int | str] = Field(default_factory=dict)


class TrackResponse(BaseModel):
    tracklets: list[TrackletModel]


class IdentifyRequest(BaseModel):
    tracklets: list[TrackletModel]
    config: dict[str, float | int | str] = Field(default_factory=dict)
    window_minutes: float | None = None


class IdentifyResponse(BaseModel):
    tracklets: list[TrackletModel]
    objective: float


class EvaluateRequest(BaseModel):
    ground_truth: list[GroundTruthEntryModel]
    tracklets: list[TrackletModel]
    iou_threshold: float | None = None
    config: dict[str, float | int | str] = Field(default_factory=dict)


class EvaluateResponse(BaseModel):
    mota: float
    idf1: float
    id_switches: int
    switches_per_minute: float
    id_accuracy: float
    fp: int
    fn: int
    gt_count: int
    idtp: int
    idfp: int
    idfn: int
    matched: int
    minutes: float

    @classmethod
    def from_report(cls, report: EvalReport) -> "EvaluateResponse":
        return cls(**report.to_dict())


class SimulateRequest(BaseModel):
    scene: dict[str, float | int | str] = Field(default_factory=dict)
    seed: int | None = None


class SimulateResponse(BaseModel):
    seed: int
    detections: list[DetectionModel]
    ground_truth: list[GroundTruthEntryModel]


class HealthResponse(BaseModel):
    status: str
    version: str
