from __future__ import annotations

import numpy as np
import pytest

from cagetrack.errors import FrameRangeMismatch
from cagetrack.metrics import GroundTruth, evaluate, hypotheses_by_frame, match_frame, GTEntry, HypEntry
from cagetrack.types import IDENTITY_CLASSES, BBox, Observation, Tracklet
from oracles import naive_clear, naive_idf1


def _box(x, y=0.0, w=10.0, h=10.0):
    return BBox(x, y, w, h)


def _tracklet(tid, boxes_by_frame, tags=None):
    tags = np.asarray(tags if tags is not None else [0.2] * 5)
    obs = [Observation(f, b, tags, 1.0) for f, b in sorted(boxes_by_frame.items())]
    return Tracklet.from_observations(tid, obs)


def _gt_from(boxes_by_target):
    entries = []
    for gt_id, frames in boxes_by_target.items():
        identity = IDENTITY_CLASSES[gt_id % 3]
        for f, b in frames.items():
            entries.append((f, gt_id, b, identity))
    return GroundTruth.from_entries(entries)


def test_match_frame_identical_boxes_all_match():
    gts = [GTEntry(0, _box(0), None), GTEntry(1, _box(50), None)]
    hyps = [HypEntry(10, _box(0), None), HypEntry(11, _box(50), None)]
    matches = match_frame(gts, hyps, {})
    assert matches == {0: 10, 1: 11}


def test_match_frame_below_threshold_unmatched():
    gts = [GTEntry(0, _box(0), None)]
    hyps = [HypEntry(10, _box(8.0), None)]  # IoU = 2/18 < 0.5
    assert match_frame(gts, hyps, {}) == {}


def test_match_frame_prefers_total_iou_on_crossings():
    # hyp A overlaps gt0 a bit and gt1 a lot; hyp B only overlaps gt0
    gts = [GTEntry(0, _box(0), None), GTEntry(1, _box(6), None)]
    hyps = [HypEntry(10, _box(4), None), HypEntry(11, _box(1), None)]
    matches = match_frame(gts, hyps, {}, iou_threshold=0.2)
    # brute force over the 2x2 says (0->11, 1->10) maximizes total IoU
    assert matches == {0: 11, 1: 10}


def test_match_frame_carries_previous_correspondence():
    gts = [GTEntry(0, _box(0), None)]
    hyps = [HypEntry(10, _box(2.0), None), HypEntry(11, _box(-2.0), None)]
    # both hyps have equal IoU; the remembered one wins
    assert match_frame(gts, hyps, {0: 11})[0] == 11
    assert match_frame(gts, hyps, {0: 10})[0] == 10


def test_perfect_tracking_scores_perfectly():
    frames = {f: _box(2.0 * f) for f in range(100)}
    gt = _gt_from({0: frames})
    hyp = _tracklet(1, frames)
    report = evaluate(gt, [hyp], {1: IDENTITY_CLASSES[0]}, minutes=100 / (30 * 60))
    assert report.mota == 1.0
    assert report.idf1 == 1.0
    assert report.id_switches == 0
    assert report.id_accuracy == 1.0
    assert report.fp == 0 and report.fn == 0


def test_shifted_hypothesis_counts_fp_and_fn():
    gt = _gt_from({0: {0: _box(0)}})
    hyp = _tracklet(1, {0: _box(9.0)})
    report = evaluate(gt, [hyp], {}, minutes=1.0)
    assert report.fp == 1 and report.fn == 1
    assert report.mota == pytest.approx(1 - 2 / 1)


def test_mid_sequence_swap_counts_two_switches():
    """Two perfect 100-frame tracks whose hypothesis ids swap at frame 50."""
    gt = _gt_from({0: {f: _box(0) for f in range(100)}, 1: {f: _box(50) for f in range(100)}})
    h1 = {f: _box(0) for f in range(50)}
    h1.update({f: _box(50) for f in range(50, 100)})
    h2 = {f: _box(50) for f in range(50)}
    h2.update({f: _box(0) for f in range(50, 100)})
    report = evaluate(gt, [_tracklet(1, h1), _tracklet(2, h2)], {}, minutes=1.0)
    assert report.id_switches == 2
    assert report.mota == pytest.approx(1 - 2 / 200)
    assert report.switches_per_minute == pytest.approx(2.0)


def test_eval_report_identities_hold():
    gt = _gt_from({0: {f: _box(1.0 * f) for f in range(60)}})
    hyp = _tracklet(1, {f: _box(1.0 * f + (3.0 if f > 30 else 0.0)) for f in range(55)})
    report = evaluate(gt, [hyp], {}, minutes=2.0)
    assert report.mota == pytest.approx(
        1 - (report.fn + report.fp + report.id_switches) / report.gt_count, abs=1e-9
    )
    assert report.idf1 == pytest.approx(
        2 * report.idtp / (2 * report.idtp + report.idfp + report.idfn), abs=1e-9
    )
    assert report.switches_per_minute == pytest.approx(report.id_switches / 2.0)


def test_hypothesis_outside_gt_range_raises():
    gt = _gt_from({0: {f: _box(0) for f in range(10)}})
    hyp = _tracklet(1, {f: _box(0) for f in range(12)})
    with pytest.raises(FrameRangeMismatch):
        evaluate(gt, [hyp], {}, minutes=1.0)


def test_relabeling_hypothesis_ids_changes_nothing():
    rng = np.random.default_rng(7)
    gt, tracklets = _random_scene(rng, n_targets=3, n_frames=80)
    base = evaluate(gt, tracklets, {}, minutes=1.0)
    relabeled = [
        Tracklet(t.id + 1000, t.start_frame, t.end_frame, t.observations, t.class_conf_sums)
        for t in tracklets
    ]
    shifted = evaluate(gt, relabeled, {}, minutes=1.0)
    assert (base.mota, base.idf1, base.id_switches) == (shifted.mota, shifted.idf1, shifted.id_switches)


def test_fragmentation_with_correct_identity_keeps_id_accuracy():
    frames = {f: _box(2.0 * f) for f in range(100)}
    gt = _gt_from({0: frames})
    first = _tracklet(1, {f: b for f, b in frames.items() if f < 50})
    second = _tracklet(2, {f: b for f, b in frames.items() if f >= 50})
    identity = {1: IDENTITY_CLASSES[0], 2: IDENTITY_CLASSES[0]}
    report = evaluate(gt, [first, second], identity, minutes=1.0)
    assert report.id_accuracy == 1.0
    assert report.id_switches == 1  # fragmentation still switches the track id


def _random_scene(rng, n_targets=3, n_frames=100):
    """Ground truth plus noisy fragmented hypotheses for oracle comparison."""
    gt_tracks = {}
    for k in range(n_targets):
        x = float(rng.uniform(0, 300))
        y = float(rng.uniform(0, 200))
        frames = {}
        for f in range(n_frames):
            x += float(rng.normal(0, 3))
            y += float(rng.normal(0, 3))
            frames[f] = _box(x, y, 12.0, 12.0)
        gt_tracks[k] = frames
    gt = _gt_from(gt_tracks)
    tracklets = []
    tid = 1
    for k, frames in gt_tracks.items():
        cut = int(rng.integers(20, n_frames - 10))
        for lo, hi in [(0, cut), (cut, n_frames)]:
            obs_frames = {}
            for f in range(lo, hi):
                if rng.random() < 0.1:
                    continue  # missed
                b = frames[f]
                obs_frames[f] = _box(
                    b.x + float(rng.normal(0, 1.5)), b.y + float(rng.normal(0, 1.5)), b.w, b.h
                )
            if obs_frames:
                tracklets.append(_tracklet(tid, obs_frames))
                tid += 1
    # a few outright false positives
    for _ in range(int(rng.integers(0, 3))):
        f0 = int(rng.integers(0, n_frames - 5))
        obs_frames = {f: _box(float(rng.uniform(0, 300)), float(rng.uniform(0, 200))) for f in range(f0, f0 + 5)}
        tracklets.append(_tracklet(tid, obs_frames))
        tid += 1
    return gt, tracklets


def _to_plain(gt, tracklets):
    gt_frames = {
        frame: [(e.gt_id, (e.box.x, e.box.y, e.box.w, e.box.h), e.identity) for e in entries]
        for frame, entries in gt.frames.items()
    }
    hyp = hypotheses_by_frame(tracklets, {})
    hyp_frames = {
        frame: [(e.hyp_id, (e.box.x, e.box.y, e.box.w, e.box.h), e.identity) for e in entries]
        for frame, entries in hyp.items()
    }
    return gt_frames, hyp_frames


def test_clear_tallies_match_naive_oracle(rng):
    for case in range(30):
        gt, tracklets = _random_scene(rng, n_targets=int(rng.integers(1, 4)), n_frames=60)
        report = evaluate(gt, tracklets, {}, minutes=1.0)
        gt_frames, hyp_frames = _to_plain(gt, tracklets)
        expected = naive_clear(gt_frames, hyp_frames, 0.5)
        assert report.fp == expected["fp"], f"case {case}"
        assert report.fn == expected["fn"], f"case {case}"
        assert report.id_switches == expected["idsw"], f"case {case}"
        assert report.gt_count == expected["gt"]
        mota = 1 - (expected["fn"] + expected["fp"] + expected["idsw"]) / expected["gt"]
        assert report.mota == pytest.approx(mota, abs=1e-9)
        idtp, idfp, idfn, idf1 = naive_idf1(gt_frames, hyp_frames, 0.5)
        assert (report.idtp, report.idfp, report.idfn) == (idtp, idfp, idfn)
        assert report.idf1 == pytest.approx(idf1, abs=1e-9)
