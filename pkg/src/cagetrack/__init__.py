"""Streaming multi-object tracking and ear-tag identity assignment.

The engine converts per-frame detections (boxes, confidences, appearance
embeddings, ear-tag class scores) into temporally coherent tracklets, then
assigns each tracklet a globally optimal identity. A synthetic scene
simulator and a MOTA/IDF1 evaluation suite close the loop for verification.
"""

__version__ = "0.1.0"

from .types import BBox, Detection, EarTagClass, Observation, Tracklet  # noqa: F401
