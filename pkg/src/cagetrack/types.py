"""Shared domain types: boxes, detections, ear-tag classes, tracklets.

All types here are immutable value data and safe to share across concurrent
stream processors. Boxes use the top-left + width/height convention; the
motion filter converts to its own parameterization internally.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    EmbeddingDimMismatch,
    NegativeDimension,
    NonFiniteField,
    ScoreSumMismatch,
    ValidationError,
)

N_TAG_CLASSES = 5
DEFAULT_EMBEDDING_DIM = 128

SCORE_SUM_TOL = 1e-6


class EarTagClass(enum.Enum):
    """The five ear-tag classifier classes.

    The first three carry identity evidence; ``NO_READ`` (tag present but not
    legible) and ``NO_EAR_TAG`` (tag absent) carry none.
    """

    BROWN_CHECKERED = "brown_checkered"
    RED_BARRED = "red_barred"
    BLACK_ALL_FILLED = "black_all_filled"
    NO_READ = "no_read"
    NO_EAR_TAG = "no_ear_tag"

    @property
    def index(self) -> int:
        return _CLASS_ORDER.index(self)

    @property
    def identity_bearing(self) -> bool:
        return self.index < 3


_CLASS_ORDER = (
    EarTagClass.BROWN_CHECKERED,
    EarTagClass.RED_BARRED,
    EarTagClass.BLACK_ALL_FILLED,
    EarTagClass.NO_READ,
    EarTagClass.NO_EAR_TAG,
)

#: Identity-bearing classes, in canonical order. Identity k of a cage maps to
#: IDENTITY_CLASSES[k]; triple housing uses all three.
IDENTITY_CLASSES: tuple[EarTagClass, ...] = _CLASS_ORDER[:3]


def tag_class_from_name(name: str) -> EarTagClass:
    for c in _CLASS_ORDER:
        if c.value == name:
            return c
    raise ValidationError(f"unknown ear-tag class name {name!r}")


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left corner plus positive width/height (pixels)."""

    x: float
    y: float
    w: float
    h: float

    def validate(self) -> None:
        for name in ("x", "y", "w", "h"):
            if not math.isfinite(getattr(self, name)):
                raise NonFiniteField(f"box field {name} is not finite")
        if self.w <= 0 or self.h <= 0:
            raise NegativeDimension(f"box has non-positive size {self.w}x{self.h}")

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def diagonal(self) -> float:
        return math.hypot(self.w, self.h)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True, eq=False)
class Detection:
    """One per-frame observation from the upstream detector + classifier.

    ``tag_scores`` is a length-5 distribution over :class:`EarTagClass` (sums
    to 1 within ``SCORE_SUM_TOL``); ``embedding`` is the appearance vector of
    the crop, with one fixed dimension per stream.
    """

    frame: int
    box: BBox
    confidence: float
    embedding: np.ndarray
    tag_scores: np.ndarray


def validate_detection(d: Detection, embedding_dim: int | None = None) -> None:
    """Check every Detection invariant, raising the specific violation.

    Raises:
        NonFiniteField: any numeric field is NaN/inf, or the frame is negative.
        NegativeDimension: degenerate box.
        ScoreSumMismatch: tag scores negative or not summing to 1.
        EmbeddingDimMismatch: embedding length differs from ``embedding_dim``.
    """
    if d.frame < 0:
        raise NonFiniteField(f"frame index {d.frame} is negative")
    d.box.validate()
    if not math.isfinite(d.confidence) or not 0.0 <= d.confidence <= 1.0:
        raise NonFiniteField(f"confidence {d.confidence} outside [0, 1]")
    if not np.all(np.isfinite(d.embedding)):
        raise NonFiniteField("embedding contains non-finite values")
    if embedding_dim is not None and d.embedding.shape != (embedding_dim,):
        raise EmbeddingDimMismatch(
            f"embedding has {d.embedding.shape[0]} dims, stream is configured for {embedding_dim}"
        )
    if d.tag_scores.shape != (N_TAG_CLASSES,):
        raise ScoreSumMismatch(f"tag_scores must have length {N_TAG_CLASSES}")
    if not np.all(np.isfinite(d.tag_scores)) or np.any(d.tag_scores < 0):
        raise ScoreSumMismatch("tag_scores must be finite and non-negative")
    total = float(d.tag_scores.sum())
    if abs(total - 1.0) > SCORE_SUM_TOL:
        raise ScoreSumMismatch(f"tag_scores sum to {total}, expected 1")


class Observation(NamedTuple):
    """One matched detection inside a tracklet."""

    frame: int
    box: BBox
    tag_scores: np.ndarray
    conf: float


@dataclass(eq=False)
class Tracklet:
    """A temporally contiguous run of observations hypothesized to be one animal.

    ``class_conf_sums[k]`` accumulates the k-th tag score over all
    observations; the identity solver uses these sums as its objective terms.
    """

    id: int
    start_frame: int
    end_frame: int
    observations: tuple[Observation, ...]
    class_conf_sums: np.ndarray

    @classmethod
    def from_observations(cls, tid: int, observations: Sequence[Observation]) -> "Tracklet":
        obs = tuple(observations)
        if not obs:
            raise ValidationError("a tracklet needs at least one observation")
        sums = np.zeros(N_TAG_CLASSES)
        for o in obs:
            sums += o.tag_scores
        return cls(
            id=tid,
            start_frame=obs[0].frame,
            end_frame=obs[-1].frame,
            observations=obs,
            class_conf_sums=sums,
        )

    def validate(self) -> None:
        if self.start_frame > self.end_frame:
            raise ValidationError(f"tracklet {self.id}: start after end")
        frames = [o.frame for o in self.observations]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValidationError(f"tracklet {self.id}: observation frames not strictly increasing")
        if frames and (frames[0] < self.start_frame or frames[-1] > self.end_frame):
            raise ValidationError(f"tracklet {self.id}: observations outside [start, end]")
        recomputed = np.zeros(N_TAG_CLASSES)
        for o in self.observations:
            recomputed += o.tag_scores
        if np.any(np.abs(recomputed - self.class_conf_sums) > 1e-9 * max(1, len(self.observations))):
            raise ValidationError(f"tracklet {self.id}: class_conf_sums inconsistent with observations")

    def overlaps(self, other: "Tracklet") -> bool:
        """Whether the two frame intervals (inclusive) intersect."""
        return self.start_frame <= other.end_frame and other.start_frame <= self.end_frame
