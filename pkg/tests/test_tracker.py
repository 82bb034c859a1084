from __future__ import annotations

import numpy as np
import pytest

from cagetrack.errors import NonMonotonicFrame
from cagetrack.pipeline import track_detections
from cagetrack.config import Config
from cagetrack.simulator import SceneConfig, generate
from cagetrack.tracker import MouseTracker, TrackStatus, TrackerParams
from cagetrack.types import BBox
from conftest import make_detection


def _det(frame, x, y, emb, conf=0.95):
    return make_detection(frame=frame, box=BBox(x, y, 20, 40), conf=conf, emb=emb)


def _unit(i, dim=8):
    v = np.zeros(dim)
    v[i] = 1.0
    return v


def test_cold_start_spawns_tentative_tracks():
    tracker = MouseTracker()
    dets = [_det(0, 10 + 100 * k, 10, _unit(k)) for k in range(4)]
    tracker.step(0, dets)
    tracks = tracker.active_tracks
    assert len(tracks) == 4
    assert all(t.status is TrackStatus.TENTATIVE for t in tracks)
    assert [t.id for t in tracks] == [1, 2, 3, 4]


def test_perfect_continuation_resets_age():
    tracker = MouseTracker()
    emb = _unit(0)
    tracker.step(0, [_det(0, 10, 10, emb)])
    tracker.step(1, [_det(1, 10, 10, emb)])
    track = tracker.active_tracks[0]
    assert track.time_since_update == 0
    assert track.hits == 2


def test_confirmation_after_n_init_hits():
    tracker = MouseTracker(TrackerParams(n_init=3))
    emb = _unit(0)
    for f in range(3):
        tracker.step(f, [_det(f, 10, 10, emb)])
    assert tracker.active_tracks[0].status is TrackStatus.CONFIRMED


def test_unmatched_track_ages_one_per_frame():
    tracker = MouseTracker()
    emb = _unit(0)
    for f in range(3):
        tracker.step(f, [_det(f, 10, 10, emb)])
    for f in range(3, 6):
        tracker.step(f, [])
        assert tracker.active_tracks[0].time_since_update == f - 2


def test_track_deleted_after_max_age():
    tracker = MouseTracker(TrackerParams(max_age=5))
    emb = _unit(0)
    for f in range(3):
        tracker.step(f, [_det(f, 10, 10, emb)])
    for f in range(3, 9):
        tracker.step(f, [])
    assert tracker.active_tracks == []
    # the confirmed span still comes out at finalize
    tracklets = tracker.finalize()
    assert len(tracklets) == 1
    assert (tracklets[0].start_frame, tracklets[0].end_frame) == (0, 2)


def test_frames_must_advance():
    tracker = MouseTracker()
    tracker.step(5, [])
    with pytest.raises(NonMonotonicFrame):
        tracker.step(5, [])
    with pytest.raises(NonMonotonicFrame):
        tracker.step(4, [])


def test_detection_frame_must_match_step_frame():
    tracker = MouseTracker()
    with pytest.raises(NonMonotonicFrame):
        tracker.step(3, [_det(2, 10, 10, _unit(0))])


def test_frame_gaps_age_tracks_by_gap():
    tracker = MouseTracker(TrackerParams(max_age=30))
    emb = _unit(0)
    for f in range(3):
        tracker.step(f, [_det(f, 10, 10, emb)])
    tracker.step(10, [])
    assert tracker.active_tracks[0].time_since_update == 8


def test_tentative_only_tracks_never_emitted():
    tracker = MouseTracker(TrackerParams(n_init=3))
    tracker.step(0, [_det(0, 10, 10, _unit(0))])
    tracker.step(1, [])
    assert tracker.finalize() == []


def test_no_two_tracks_share_a_detection():
    tracker = MouseTracker()
    for f in range(20):
        dets = [_det(f, 10 + 3 * f, 10, _unit(0)), _det(f, 300 - 3 * f, 10, _unit(1))]
        tracker.step(f, dets)
        frames = {}
        for t in tracker.active_tracks:
            if t.observations and t.observations[-1].frame == f:
                key = (t.observations[-1].box.x, t.observations[-1].box.y)
                assert key not in frames, "two tracks claimed one detection"
                frames[key] = t.id


def _constant_velocity_stream(n_targets, n_frames, dim=8):
    dets = []
    starts = [(20.0 + 200.0 * k, 20.0 + 120.0 * k) for k in range(n_targets)]
    vels = [(1.5 + 0.5 * k, 0.8 - 0.3 * k) for k in range(n_targets)]
    for f in range(n_frames):
        for k in range(n_targets):
            x = starts[k][0] + vels[k][0] * f
            y = starts[k][1] + vels[k][1] * f
            dets.append(_det(f, x, y, _unit(k, dim)))
    return dets


def test_three_clean_constant_velocity_targets_over_300_frames():
    dets = _constant_velocity_stream(3, 300)
    tracklets = track_detections(iter(dets), Config())
    assert len(tracklets) == 3
    for t in tracklets:
        assert (t.start_frame, t.end_frame) == (0, 299)
        assert len(t.observations) == 300


@pytest.mark.parametrize("n_targets", [1, 2, 3, 4, 5])
def test_perfect_simulated_scenes_yield_exactly_n_tracklets(n_targets):
    scene = SceneConfig(n_mice=n_targets, duration_s=8.0, seed=17 + n_targets)
    _, dets = generate(scene)
    tracklets = track_detections(iter(dets), Config())
    assert len(tracklets) == n_targets
    for t in tracklets:
        assert len(t.observations) == scene.n_frames


def test_determinism_identical_streams_identical_tracklets():
    scene = SceneConfig(n_mice=3, duration_s=5.0, seed=9, miss_rate=0.1, box_jitter_std=1.0)
    _, dets = generate(scene)
    a = track_detections(iter(dets), Config())
    b = track_detections(iter(dets), Config())
    assert [t.id for t in a] == [t.id for t in b]
    for ta, tb in zip(a, b):
        assert ta.start_frame == tb.start_frame and ta.end_frame == tb.end_frame
        assert len(ta.observations) == len(tb.observations)
        for oa, ob in zip(ta.observations, tb.observations):
            assert oa.frame == ob.frame and oa.box == ob.box


def test_tracklet_conf_sums_match_recomputation():
    scene = SceneConfig(n_mice=2, duration_s=4.0, seed=4)
    _, dets = generate(scene)
    for t in track_detections(iter(dets), Config()):
        recomputed = sum(o.tag_scores for o in t.observations)
        assert np.allclose(t.class_conf_sums, recomputed, atol=1e-9)


def test_relink_across_brief_occlusion():
    """A lost track coasting through missed frames re-links to its target."""
    tracker = MouseTracker(TrackerParams(max_age=30))
    emb = _unit(0)
    for f in range(10):
        tracker.step(f, [_det(f, 10.0 + 2 * f, 10, emb)])
    for f in range(10, 16):
        tracker.step(f, [])  # detector drops the target
    for f in range(16, 25):
        tracker.step(f, [_det(f, 10.0 + 2 * f, 10, emb)])
    tracklets = tracker.finalize()
    assert len(tracklets) == 1
    assert tracklets[0].end_frame == 24
