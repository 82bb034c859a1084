"""Online per-frame tracking loop: predict, associate, manage lifecycles.

One tracker instance owns one cage stream and must be stepped in strictly
increasing frame order. Tracks are born Tentative, confirm after ``n_init``
consecutive hits, coast as Lost while unmatched (their motion prediction
still competes for detections, which is what re-links brief occlusions), and
are deleted once unmatched for more than ``max_age`` frames.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import assoc, kalman
from .errors import NonMonotonicFrame
from .geometry import iou
from .types import Detection, Observation, Tracklet


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    LOST = "lost"
    DELETED = "deleted"


@dataclass
class TrackerParams:
    n_init: int = 3
    max_age: int = 30
    fuse_lambda: float = assoc.DEFAULT_LAMBDA
    ema_alpha: float = assoc.DEFAULT_EMA_ALPHA
    match_threshold: float = assoc.DEFAULT_MATCH_THRESHOLD
    appearance_gate: float = assoc.DEFAULT_APPEARANCE_GATE
    kalman: kalman.KalmanParams = field(default_factory=kalman.KalmanParams)


@dataclass
class Track:
    """One tracked hypothesis and its bookkeeping."""

    id: int
    state: kalman.KalmanState
    status: TrackStatus
    hits: int
    time_since_update: int
    ever_confirmed: bool
    observations: list[Observation]

    def mark_hit(self, n_init: int) -> None:
        self.hits += 1
        self.time_since_update = 0
        if self.status is TrackStatus.TENTATIVE and self.hits >= n_init:
            self.status = TrackStatus.CONFIRMED
        elif self.status is TrackStatus.LOST:
            self.status = TrackStatus.CONFIRMED
        if self.status is TrackStatus.CONFIRMED:
            self.ever_confirmed = True

    def mark_missed(self, max_age: int) -> None:
        # a tentative track that misses once was never corroborated; drop it
        if self.status is TrackStatus.TENTATIVE:
            self.status = TrackStatus.DELETED
        elif self.time_since_update > max_age:
            self.status = TrackStatus.DELETED
        elif self.status is TrackStatus.CONFIRMED:
            self.status = TrackStatus.LOST


class MouseTracker:
    """Links detections of one stream into temporally coherent tracklets."""

    def __init__(self, params: TrackerParams | None = None):
        self.params = params or TrackerParams()
        self._bank = assoc.AppearanceBank(alpha=self.params.ema_alpha)
        self._tracks: list[Track] = []
        self._finished: list[Track] = []
        self._next_id = 1
        self._last_frame: int | None = None

    @property
    def active_tracks(self) -> list[Track]:
        return list(self._tracks)

    def step(self, frame: int, detections: list[Detection]) -> None:
        """Advance to ``frame`` and associate its detections.

        Raises:
            NonMonotonicFrame: ``frame`` does not advance past the previous
                step, or a detection is stamped with a different frame.
        """
        if self._last_frame is not None and frame <= self._last_frame:
            raise NonMonotonicFrame(f"frame {frame} after frame {self._last_frame}")
        for d in detections:
            if d.frame != frame:
                raise NonMonotonicFrame(f"detection stamped {d.frame} fed to frame {frame}")

        # advance through skipped frames: tracks coast and age without input
        gap = 1 if self._last_frame is None else frame - self._last_frame
        for k in range(gap):
            for t in self._tracks:
                t.state = kalman.predict(t.state, self.params.kalman)
                t.time_since_update += 1
            if k < gap - 1:
                self._apply_missed(self._tracks)
                self._reap()
        self._last_frame = frame

        matches, unmatched_tracks, unmatched_dets = self._associate(detections)
        for ti, di in matches:
            self._apply_match(self._tracks[ti], detections[di])
        self._apply_missed([self._tracks[ti] for ti in unmatched_tracks])
        for di in unmatched_dets:
            self._spawn(detections[di])
        self._reap()

    def finalize(self) -> list[Tracklet]:
        """Emit every track that ever confirmed as a tracklet; drop the rest."""
        done = self._finished + self._tracks
        tracklets = [
            Tracklet.from_observations(t.id, t.observations)
            for t in sorted(done, key=lambda t: t.id)
            if t.ever_confirmed and t.observations
        ]
        return tracklets

    # -- association ------------------------------------------------------

    def _associate(self, detections: list[Detection]):
        n_t, n_d = len(self._tracks), len(detections)
        if n_t == 0 or n_d == 0:
            return [], list(range(n_t)), list(range(n_d))
        embeddings = [assoc.normalize(d.embedding) for d in detections]
        motion = np.empty((n_t, n_d))
        appearance = np.empty((n_t, n_d))
        for i, t in enumerate(self._tracks):
            predicted = kalman.project(t.state)
            bank_vec = self._bank.get(t.id)
            for j, d in enumerate(detections):
                overlap = iou(predicted, d.box)
                motion[i, j] = 1.0 - overlap
                appearance[i, j] = assoc.cosine_cost(bank_vec, embeddings[j])
                if overlap == 0.0 and appearance[i, j] > self.params.appearance_gate:
                    motion[i, j] = assoc.GATED
        fused = assoc.fuse_costs(motion, appearance, self.params.fuse_lambda)
        return assoc.hungarian(fused, self.params.match_threshold)

    def _apply_match(self, track: Track, det: Detection) -> None:
        track.state = kalman.update(track.state, det.box, det.confidence, self.params.kalman)
        self._bank.update(track.id, assoc.normalize(det.embedding))
        track.observations.append(
            Observation(det.frame, det.box, np.array(det.tag_scores), det.confidence)
        )
        track.mark_hit(self.params.n_init)

    def _apply_missed(self, tracks: list[Track]) -> None:
        for t in tracks:
            t.mark_missed(self.params.max_age)

    def _spawn(self, det: Detection) -> None:
        track = Track(
            id=self._next_id,
            state=kalman.init(det.box, self.params.kalman),
            status=TrackStatus.TENTATIVE,
            hits=1,
            time_since_update=0,
            ever_confirmed=False,
            observations=[Observation(det.frame, det.box, np.array(det.tag_scores), det.confidence)],
        )
        self._next_id += 1
        self._tracks.append(track)
        self._bank.update(track.id, assoc.normalize(det.embedding))

    def _reap(self) -> None:
        alive, dead = [], []
        for t in self._tracks:
            (dead if t.status is TrackStatus.DELETED else alive).append(t)
        for t in dead:
            self._bank.drop(t.id)
        self._tracks = alive
        self._finished.extend(dead)
