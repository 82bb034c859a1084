"""Box overlap kernels feeding the motion cost matrix."""

from __future__ import annotations

import math

from .types import BBox


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two valid boxes, in [0, 1].

    Edge-touching boxes (zero-area intersection) count as 0, which keeps the
    disjoint case free of 0/0 handling.
    """
    ix = max(a.x, b.x)
    iy = max(a.y, b.y)
    ix2 = min(a.x + a.w, b.x + b.w)
    iy2 = min(a.y + a.h, b.y + b.h)
    iw = ix2 - ix
    ih = iy2 - iy
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return min(1.0, inter / union)


def center_distance(a: BBox, b: BBox) -> float:
    """Euclidean distance between box centers, in pixels."""
    return math.hypot(a.cx - b.cx, a.cy - b.cy)
