from __future__ import annotations

import numpy as np
import pytest

from cagetrack.types import BBox, Detection, Observation, Tracklet


def make_detection(
    frame: int = 0,
    box: BBox | None = None,
    conf: float = 0.9,
    emb=None,
    tags=None,
    dim: int = 8,
) -> Detection:
    if emb is None:
        emb = np.zeros(dim)
        emb[0] = 1.0
    return Detection(
        frame=frame,
        box=box or BBox(10, 10, 20, 40),
        confidence=conf,
        embedding=np.asarray(emb, dtype=float),
        tag_scores=np.asarray(tags if tags is not None else [0.2] * 5, dtype=float),
    )


def make_tracklet(
    tid: int,
    start: int,
    end: int,
    tags=None,
    conf: float = 0.9,
    box: BBox | None = None,
) -> Tracklet:
    tags = np.asarray(tags if tags is not None else [0.2] * 5, dtype=float)
    box = box or BBox(0, 0, 10, 10)
    obs = [Observation(f, box, tags, conf) for f in range(start, end + 1)]
    return Tracklet.from_observations(tid, obs)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
