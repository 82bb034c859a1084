"""Synthetic cage scenes: ground truth plus configurable detector degradation.

The generator targets algorithmic stress, not biological fidelity: targets
follow a reflected random walk with speed persistence inside the cage, and
the emitted detections can be degraded by misses, box jitter, occlusion
merges (two overlapping targets collapse into one union box), classifier
confusion, and no-read replacement. Everything is drawn from one seeded
generator, so identical configs produce bit-identical streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig
from .geometry import iou
from .metrics import GroundTruth
from .types import IDENTITY_CLASSES, BBox, Detection, EarTagClass

_NO_READ_ROW = EarTagClass.NO_READ.index
_NO_EAR_TAG_ROW = EarTagClass.NO_EAR_TAG.index


def _identity_confusion() -> np.ndarray:
    return np.eye(5)


def diagonal_confusion(diag: float) -> np.ndarray:
    """Row-stochastic 5x5 matrix with ``diag`` on the diagonal, rest uniform."""
    if not 0.0 < diag <= 1.0:
        raise InvalidConfig(f"confusion diagonal {diag} outside (0, 1]")
    off = (1.0 - diag) / 4.0
    m = np.full((5, 5), off)
    np.fill_diagonal(m, diag)
    return m


@dataclass
class SceneConfig:
    n_mice: int = 3
    fps: float = 30.0
    duration_s: float = 60.0
    cage_w: float = 640.0
    cage_h: float = 480.0
    box_w: float = 70.0
    box_h: float = 50.0
    speed_mean: float = 3.0
    speed_std: float = 1.0
    turn_std: float = 0.35
    miss_rate: float = 0.0
    box_jitter_std: float = 0.0
    conf_mean: float = 1.0
    conf_std: float = 0.0
    #: two targets overlapping beyond this IoU emit one merged detection;
    #: 1.0 disables merging (overlap must be strictly greater).
    occlusion_iou: float = 1.0
    confusion: np.ndarray = field(default_factory=_identity_confusion)
    no_read_rate: float = 0.33
    emb_dim: int = 128
    #: anchor-to-noise ratio of embeddings (same-animal cosine is about
    #: emb_sep^2 / (emb_sep^2 + 1)); 0 makes all animals look clonal.
    emb_sep: float = 2.0
    seed: int = 0

    def validate(self) -> None:
        if self.n_mice < 1:
            raise InvalidConfig("n_mice must be at least 1")
        if self.fps <= 0 or self.duration_s <= 0:
            raise InvalidConfig("fps and duration_s must be positive")
        if self.box_w <= 0 or self.box_h <= 0:
            raise InvalidConfig("box size must be positive")
        if self.cage_w <= self.box_w or self.cage_h <= self.box_h:
            raise InvalidConfig("cage must be larger than the target box")
        for name in ("miss_rate", "no_read_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"{name} {v} outside [0, 1]")
        if self.speed_mean < 0 or self.speed_std < 0 or self.turn_std < 0:
            raise InvalidConfig("motion parameters must be non-negative")
        if self.box_jitter_std < 0 or self.conf_std < 0:
            raise InvalidConfig("detector noise parameters must be non-negative")
        if self.emb_dim < 1:
            raise InvalidConfig("emb_dim must be at least 1")
        if self.emb_sep < 0:
            raise InvalidConfig("emb_sep must be non-negative")
        m = np.asarray(self.confusion, dtype=float)
        if m.shape != (5, 5) or np.any(m < 0):
            raise InvalidConfig("confusion must be a non-negative 5x5 matrix")
        if np.any(np.abs(m.sum(axis=1) - 1.0) > 1e-9):
            raise InvalidConfig("confusion rows must sum to 1")

    @property
    def n_frames(self) -> int:
        return int(round(self.fps * self.duration_s))


def _true_class_index(target: int) -> int:
    # targets beyond the identity-bearing classes wear no tag
    return target if target < len(IDENTITY_CLASSES) else _NO_EAR_TAG_ROW


def _merge_components(boxes: list[BBox], threshold: float) -> list[list[int]]:
    """Connected components of the pairwise-overlap graph, in index order."""
    n = len(boxes)
    adj: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if iou(boxes[i], boxes[j]) > threshold:
                adj[i].append(j)
                adj[j].append(i)
    seen = [False] * n
    components = []
    for i in range(n):
        if seen[i]:
            continue
        stack, comp = [i], []
        seen[i] = True
        while stack:
            k = stack.pop()
            comp.append(k)
            for nb in adj[k]:
                if not seen[nb]:
                    seen[nb] = True
                    stack.append(nb)
        components.append(sorted(comp))
    return components


def generate(cfg: SceneConfig) -> tuple[GroundTruth, list[Detection]]:
    """Produce the truth trajectories and the degraded detection stream.

    Raises:
        InvalidConfig: any scene parameter is out of range.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_mice
    half_w, half_h = cfg.box_w / 2.0, cfg.box_h / 2.0
    lo = np.array([half_w, half_h])
    hi = np.array([cfg.cage_w - half_w, cfg.cage_h - half_h])

    anchors = rng.standard_normal((n, cfg.emb_dim))
    anchors /= np.linalg.norm(anchors, axis=1, keepdims=True)
    pos = rng.uniform(lo, hi, size=(n, 2))
    heading = rng.uniform(0.0, 2.0 * math.pi, size=n)
    speed = np.clip(rng.normal(cfg.speed_mean, cfg.speed_std, size=n), 0.0, None)

    gt_entries: list[tuple[int, int, BBox, EarTagClass | None]] = []
    detections: list[Detection] = []

    for frame in range(cfg.n_frames):
        boxes = [
            BBox(x=pos[k, 0] - half_w, y=pos[k, 1] - half_h, w=cfg.box_w, h=cfg.box_h)
            for k in range(n)
        ]
        for k in range(n):
            identity = IDENTITY_CLASSES[k] if k < len(IDENTITY_CLASSES) else None
            gt_entries.append((frame, k, boxes[k], identity))

        for comp in _merge_components(boxes, cfg.occlusion_iou):
            if len(comp) == 1:
                source = comp[0]
                box = boxes[source]
            else:
                source = comp[int(rng.integers(len(comp)))]
                x1 = min(boxes[k].x for k in comp)
                y1 = min(boxes[k].y for k in comp)
                x2 = max(boxes[k].x + boxes[k].w for k in comp)
                y2 = max(boxes[k].y + boxes[k].h for k in comp)
                box = BBox(x=x1, y=y1, w=x2 - x1, h=y2 - y1)
            if rng.random() < cfg.miss_rate:
                continue
            if cfg.box_jitter_std > 0:
                dx, dy, dw, dh = rng.normal(0.0, cfg.box_jitter_std, size=4)
                box = BBox(
                    x=box.x + dx,
                    y=box.y + dy,
                    w=max(2.0, box.w + dw),
                    h=max(2.0, box.h + dh),
                )
            conf = cfg.conf_mean if cfg.conf_std == 0 else float(
                np.clip(rng.normal(cfg.conf_mean, cfg.conf_std), 0.0, 1.0)
            )
            if rng.random() < cfg.no_read_rate:
                row = cfg.confusion[_NO_READ_ROW]
            else:
                row = cfg.confusion[_true_class_index(source)]
            noise = rng.standard_normal(cfg.emb_dim) / math.sqrt(cfg.emb_dim)
            emb = cfg.emb_sep * anchors[source] + noise
            emb /= np.linalg.norm(emb)
            detections.append(
                Detection(
                    frame=frame,
                    box=box,
                    confidence=float(conf),
                    embedding=emb,
                    tag_scores=np.array(row, dtype=float),
                )
            )

        # motion step: heading random walk, speed pulled back toward its mean
        heading = heading + rng.normal(0.0, cfg.turn_std, size=n)
        speed = np.clip(
            speed + 0.15 * (cfg.speed_mean - speed) + rng.normal(0.0, 0.3 * cfg.speed_std, size=n),
            0.0,
            None,
        )
        pos = pos + np.stack([speed * np.cos(heading), speed * np.sin(heading)], axis=1)
        for axis in range(2):
            low, high = lo[axis], hi[axis]
            for k in range(n):
                if pos[k, axis] < low:
                    pos[k, axis] = min(2 * low - pos[k, axis], high)
                    heading[k] = math.pi - heading[k] if axis == 0 else -heading[k]
                elif pos[k, axis] > high:
                    pos[k, axis] = max(2 * high - pos[k, axis], low)
                    heading[k] = math.pi - heading[k] if axis == 0 else -heading[k]

    return GroundTruth.from_entries(gt_entries), detections
