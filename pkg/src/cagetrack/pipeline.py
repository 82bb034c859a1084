"""High-level stage drivers shared by the CLI and the HTTP service.

Each function runs one stage of the pipeline (simulate, track, identify,
evaluate) against in-memory data or files. The file variants stream their
inputs and are what the CLI binds; the service endpoints call the in-memory
variants on request payloads.
"""

from __future__ import annotations

import os
from typing import Iterable

from . import jsonl, mousemap
from .config import Config
from .metrics import EvalReport, GroundTruth, evaluate
from .simulator import generate
from .tracker import MouseTracker
from .types import Detection, EarTagClass, Tracklet


def track_detections(detections: Iterable[Detection], cfg: Config) -> list[Tracklet]:
    """Run the online tracker over an ordered detection stream."""
    tracker = MouseTracker(cfg.tracker_params())
    for frame, batch in jsonl.group_frames(detections):
        tracker.step(frame, batch)
    return tracker.finalize()


def identify_tracklets(
    tracklets: list[Tracklet],
    cfg: Config,
    window_minutes: float | None = None,
) -> tuple[list[Tracklet], mousemap.IdentityAssignment]:
    """Pre-solve and assign identities; ``window_minutes`` overrides config.

    Batch mode (the default) solves the whole recording at once; a positive
    window switches to consecutive per-window solving with continuity carry.
    """
    if window_minutes is None:
        window_minutes = (
            float(cfg["mousemap.window_minutes"]) if cfg["mousemap.windowed"] else 0.0
        )
    return mousemap.assign_identities(
        tracklets,
        window_minutes=window_minutes or None,
        fps=float(cfg["io.fps"]),
        gap_max=int(cfg["mousemap.gap_max"]),
        dist_max_ratio=float(cfg["mousemap.dist_max_ratio"]),
        continuity_bonus=float(cfg["mousemap.continuity_bonus"]),
    )


def evaluate_tracklets(
    gt: GroundTruth,
    tracklets: list[Tracklet],
    identity_map: dict[int, EarTagClass | None],
    cfg: Config,
    iou_threshold: float | None = None,
) -> EvalReport:
    frame_range = gt.frame_range
    n_frames = (frame_range[1] - frame_range[0] + 1) if frame_range else 0
    minutes = n_frames / (float(cfg["io.fps"]) * 60.0) if n_frames else 1.0
    return evaluate(
        gt,
        tracklets,
        identity_map,
        minutes=minutes,
        iou_threshold=iou_threshold if iou_threshold is not None else float(cfg["eval.iou_threshold"]),
    )


# -- file-level drivers ------------------------------------------------------


def run_simulate(cfg: Config, out_prefix: str | os.PathLike) -> tuple[str, str, int]:
    """Write ``<prefix>.detections.jsonl`` and ``<prefix>.gt.jsonl``."""
    scene = cfg.scene_config()
    gt, detections = generate(scene)
    det_path = f"{out_prefix}.detections.jsonl"
    gt_path = f"{out_prefix}.gt.jsonl"
    header = f"cagetrack simulate seed={scene.seed} n_mice={scene.n_mice} fps={scene.fps} duration_s={scene.duration_s}"
    jsonl.write_detections(det_path, detections, header=header)
    jsonl.write_ground_truth(gt_path, gt, header=header)
    return det_path, gt_path, scene.seed


def run_track(in_path: str | os.PathLike, out_path: str | os.PathLike, cfg: Config) -> int:
    """Stream a detection file through the tracker; identities stay null."""
    stream = jsonl.iter_detections(in_path, embedding_dim=int(cfg["io.embedding_dim"]))
    tracklets = track_detections(stream, cfg)
    jsonl.write_tracklets(out_path, tracklets, header=f"cagetrack track source={os.fspath(in_path)}")
    return len(tracklets)


def run_identify(
    in_path: str | os.PathLike,
    out_path: str | os.PathLike,
    cfg: Config,
    window_minutes: float | None = None,
) -> mousemap.IdentityAssignment:
    tracklets, _ = jsonl.read_tracklets(in_path)
    final, assignment = identify_tracklets(tracklets, cfg, window_minutes)
    jsonl.write_tracklets(
        out_path,
        final,
        assignment.assignment,
        header=f"cagetrack identify source={os.fspath(in_path)}",
    )
    return assignment


def run_eval(
    gt_path: str | os.PathLike,
    hyp_path: str | os.PathLike,
    cfg: Config,
    iou_threshold: float | None = None,
) -> EvalReport:
    gt = jsonl.read_ground_truth(gt_path)
    tracklets, identity_map = jsonl.read_tracklets(hyp_path)
    return evaluate_tracklets(gt, tracklets, identity_map, cfg, iou_threshold)
