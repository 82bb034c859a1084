"""Tracking and identity metrics: MOTA, IDF1, ID switches, ID accuracy.

Per-frame correspondences follow the CLEAR convention: a ground-truth target
keeps its previous hypothesis while the pair still overlaps above the IoU
threshold, and only the remainder is re-matched (minimum-cost, maximizing
total IoU). An ID switch is a matched target whose hypothesis id differs
from its most recent matched hypothesis id. IDF1 comes from the global
trajectory-level matching between truth and hypothesis tracks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from . import assoc
from .errors import FrameRangeMismatch
from .geometry import iou
from .types import BBox, EarTagClass, Tracklet

DEFAULT_IOU_THRESHOLD = 0.5


class GTEntry(NamedTuple):
    gt_id: int
    box: BBox
    identity: EarTagClass | None


class HypEntry(NamedTuple):
    hyp_id: int
    box: BBox
    identity: EarTagClass | None


@dataclass
class GroundTruth:
    """Per-frame truth: one box (and identity label) per target per frame."""

    frames: dict[int, list[GTEntry]]

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[int, int, BBox, EarTagClass | None]]) -> "GroundTruth":
        frames: dict[int, list[GTEntry]] = {}
        for frame, gt_id, box, identity in entries:
            frames.setdefault(frame, []).append(GTEntry(gt_id, box, identity))
        for frame, items in frames.items():
            ids = [e.gt_id for e in items]
            if len(ids) != len(set(ids)):
                raise ValueError(f"frame {frame}: duplicate gt ids")
            items.sort(key=lambda e: e.gt_id)
        return cls(frames=frames)

    @property
    def frame_range(self) -> tuple[int, int] | None:
        if not self.frames:
            return None
        return min(self.frames), max(self.frames)


@dataclass
class EvalReport:
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

    def to_dict(self) -> dict:
        return {
            "mota": self.mota,
            "idf1": self.idf1,
            "id_switches": self.id_switches,
            "switches_per_minute": self.switches_per_minute,
            "id_accuracy": self.id_accuracy,
            "fp": self.fp,
            "fn": self.fn,
            "gt_count": self.gt_count,
            "idtp": self.idtp,
            "idfp": self.idfp,
            "idfn": self.idfn,
            "matched": self.matched,
            "minutes": self.minutes,
        }

    def render_text(self) -> str:
        lines = [f"{key} = {value}" for key, value in self.to_dict().items()]
        return "\n".join(lines) + "\n"


def hypotheses_by_frame(
    tracklets: Iterable[Tracklet],
    identity_map: dict[int, EarTagClass | None] | None = None,
) -> dict[int, list[HypEntry]]:
    frames: dict[int, list[HypEntry]] = {}
    identity_map = identity_map or {}
    for t in tracklets:
        identity = identity_map.get(t.id)
        for o in t.observations:
            frames.setdefault(o.frame, []).append(HypEntry(t.id, o.box, identity))
    for items in frames.values():
        items.sort(key=lambda e: e.hyp_id)
    return frames


def match_frame(
    gts: list[GTEntry],
    hyps: list[HypEntry],
    last_match: dict[int, int],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> dict[int, int]:
    """One frame of CLEAR correspondence: carry over, then re-match the rest.

    ``last_match`` maps gt id to its most recent matched hypothesis id; a
    remembered pair whose boxes still overlap above the threshold is kept
    (lowest gt id wins if two targets remember the same hypothesis). The
    remaining targets and hypotheses are matched by minimum total ``1 - IoU``
    over pairs meeting the threshold.
    """
    hyp_by_id = {h.hyp_id: h for h in hyps}
    matches: dict[int, int] = {}
    claimed: set[int] = set()
    for g in gts:
        j = last_match.get(g.gt_id)
        if j is None or j in claimed or j not in hyp_by_id:
            continue
        if iou(g.box, hyp_by_id[j].box) >= iou_threshold:
            matches[g.gt_id] = j
            claimed.add(j)
    rem_g = [g for g in gts if g.gt_id not in matches]
    rem_h = [h for h in hyps if h.hyp_id not in claimed]
    if rem_g and rem_h:
        cost = np.full((len(rem_g), len(rem_h)), assoc.GATED)
        for i, g in enumerate(rem_g):
            for j, h in enumerate(rem_h):
                overlap = iou(g.box, h.box)
                if overlap >= iou_threshold:
                    cost[i, j] = 1.0 - overlap
        pairs, _, _ = assoc.hungarian(cost)
        for i, j in pairs:
            matches[rem_g[i].gt_id] = rem_h[j].hyp_id
    return matches


def evaluate(
    gt: GroundTruth,
    tracklets: list[Tracklet],
    identity_map: dict[int, EarTagClass | None] | None = None,
    minutes: float = 1.0,
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> EvalReport:
    """Score hypothesis tracklets against ground truth.

    Raises:
        FrameRangeMismatch: hypotheses carry frames outside the truth range.
    """
    hyp_frames = hypotheses_by_frame(tracklets, identity_map)
    gt_range = gt.frame_range
    if hyp_frames:
        if gt_range is None:
            raise FrameRangeMismatch("hypotheses present but ground truth is empty")
        lo, hi = min(hyp_frames), max(hyp_frames)
        if lo < gt_range[0] or hi > gt_range[1]:
            raise FrameRangeMismatch(
                f"hypothesis frames [{lo}, {hi}] outside ground truth [{gt_range[0]}, {gt_range[1]}]"
            )

    fp = fn = idsw = gt_count = matched = id_correct = 0
    last_match: dict[int, int] = {}
    all_frames = sorted(set(gt.frames) | set(hyp_frames))
    for frame in all_frames:
        gts = gt.frames.get(frame, [])
        hyps = hyp_frames.get(frame, [])
        matches = match_frame(gts, hyps, last_match, iou_threshold)
        hyp_by_id = {h.hyp_id: h for h in hyps}
        for g in gts:
            j = matches.get(g.gt_id)
            if j is None:
                continue
            prev = last_match.get(g.gt_id)
            if prev is not None and prev != j:
                idsw += 1
            last_match[g.gt_id] = j
            matched += 1
            if hyp_by_id[j].identity == g.identity:
                id_correct += 1
        gt_count += len(gts)
        fn += len(gts) - len(matches)
        fp += len(hyps) - len(matches)

    idtp, idfp, idfn = _identity_tallies(gt, hyp_frames, iou_threshold)
    mota = 1.0 - (fn + fp + idsw) / gt_count if gt_count else 1.0
    idf1 = 2.0 * idtp / (2.0 * idtp + idfp + idfn) if (idtp + idfp + idfn) else 1.0
    if matched:
        id_accuracy = id_correct / matched
    else:
        id_accuracy = 1.0 if gt_count == 0 else 0.0
    return EvalReport(
        mota=mota,
        idf1=idf1,
        id_switches=idsw,
        switches_per_minute=idsw / minutes if minutes > 0 else 0.0,
        id_accuracy=id_accuracy,
        fp=fp,
        fn=fn,
        gt_count=gt_count,
        idtp=idtp,
        idfp=idfp,
        idfn=idfn,
        matched=matched,
        minutes=minutes,
    )


def _identity_tallies(
    gt: GroundTruth,
    hyp_frames: dict[int, list[HypEntry]],
    iou_threshold: float,
) -> tuple[int, int, int]:
    """IDTP/IDFP/IDFN from the trajectory-level truth-hypothesis matching."""
    overlap: dict[tuple[int, int], int] = {}
    total_gt = 0
    total_hyp = sum(len(v) for v in hyp_frames.values())
    for frame, gts in gt.frames.items():
        total_gt += len(gts)
        for g in gts:
            for h in hyp_frames.get(frame, []):
                if iou(g.box, h.box) >= iou_threshold:
                    overlap[(g.gt_id, h.hyp_id)] = overlap.get((g.gt_id, h.hyp_id), 0) + 1
    gt_ids = sorted({g.gt_id for gts in gt.frames.values() for g in gts})
    hyp_ids = sorted({h.hyp_id for hyps in hyp_frames.values() for h in hyps})
    idtp = 0
    if gt_ids and hyp_ids and overlap:
        cost = np.zeros((len(gt_ids), len(hyp_ids)))
        for (gid, hid), n in overlap.items():
            cost[gt_ids.index(gid), hyp_ids.index(hid)] = -float(n)
        pairs, _, _ = assoc.hungarian(cost)
        idtp = int(sum(-cost[i, j] for i, j in pairs))
    return idtp, total_hyp - idtp, total_gt - idtp
