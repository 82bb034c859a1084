"""Per-frame association: cost fusion and minimum-cost bipartite matching.

Cost matrices are plain float arrays with rows = tracks and columns =
detections. Feasible entries live in [0, 1]; ``GATED`` (infinity) marks pairs
excluded from matching. Motion cost is ``1 - IoU`` and appearance cost is
``(1 - cosine) / 2`` so the two cues share a scale before fusion.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch, ZeroVector

logger = logging.getLogger(__name__)

#: Marker for an infeasible track-detection pair.
GATED = math.inf

DEFAULT_LAMBDA = 0.9
DEFAULT_EMA_ALPHA = 0.9
DEFAULT_MATCH_THRESHOLD = 0.7
DEFAULT_APPEARANCE_GATE = 0.4


def normalize(f: np.ndarray) -> np.ndarray:
    """Scale an embedding to unit L2 norm.

    Raises:
        ZeroVector: the embedding has (numerically) zero norm, which signals
            upstream data corruption rather than a legitimate crop.
    """
    norm = float(np.linalg.norm(f))
    if norm < 1e-12:
        raise ZeroVector("cannot normalize a zero embedding")
    return f / norm


def cosine_cost(e: np.ndarray, f_hat: np.ndarray) -> float:
    """Map cosine similarity of two unit vectors onto a [0, 1] cost.

    Similarity 1 becomes cost 0; antipodal vectors cost 1.
    """
    sim = float(np.dot(e, f_hat))
    return min(1.0, max(0.0, (1.0 - sim) / 2.0))


@dataclass
class AppearanceBank:
    """Per-track appearance vectors, smoothed by an exponential moving average.

    Each stored vector stays unit-norm: updates compute
    ``normalize(alpha * e + (1 - alpha) * f_hat)``, and the first observation
    of a track seeds its vector directly.
    """

    alpha: float = DEFAULT_EMA_ALPHA
    _vectors: dict[int, np.ndarray] = field(default_factory=dict)

    def get(self, track_id: int) -> np.ndarray:
        return self._vectors[track_id]

    def __contains__(self, track_id: int) -> bool:
        return track_id in self._vectors

    def update(self, track_id: int, f_hat: np.ndarray) -> np.ndarray:
        if track_id not in self._vectors:
            self._vectors[track_id] = f_hat
            return f_hat
        blended = self.alpha * self._vectors[track_id] + (1.0 - self.alpha) * f_hat
        try:
            e = normalize(blended)
        except ZeroVector:
            # exact antipodal cancellation; keep the fresh observation
            logger.warning("appearance EMA cancelled to zero for track %d; reseeding", track_id)
            e = f_hat
        self._vectors[track_id] = e
        return e

    def drop(self, track_id: int) -> None:
        self._vectors.pop(track_id, None)


def fuse_costs(motion: np.ndarray, appearance: np.ndarray, lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    """Blend motion and appearance costs: ``lam * motion + (1 - lam) * appearance``.

    A pair gated in either input stays gated in the output.
    """
    if motion.shape != appearance.shape:
        raise ShapeMismatch(f"cost shapes differ: {motion.shape} vs {appearance.shape}")
    gated = np.isinf(motion) | np.isinf(appearance)
    fused = lam * np.where(gated, 0.0, motion) + (1.0 - lam) * np.where(gated, 0.0, appearance)
    fused[gated] = GATED
    return fused


def _solve_square(cost: np.ndarray) -> list[int]:
    """Exact minimum-cost assignment on a square matrix (no infinities).

    Shortest-augmenting-path formulation with dual potentials, O(n^3).
    Scanning order always prefers the lowest index on ties, so results are
    deterministic for identical inputs.
    """
    n = cost.shape[0]
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match_col = [0] * (n + 1)  # 1-based: row matched to column j, 0 = free
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match_col[0] = i
        j0 = 0
        minv = [math.inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match_col[j0]
            delta = math.inf
            j1 = 0
            row = cost[i0 - 1]
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match_col[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match_col[j0] = match_col[j1]
            j0 = j1
    assigned = [0] * n
    for j in range(1, n + 1):
        if match_col[j] > 0:
            assigned[match_col[j] - 1] = j - 1
    return assigned


def hungarian(
    costs: np.ndarray,
    match_threshold: float | None = None,
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Optimal one-to-one matching over the non-gated entries of a cost matrix.

    Rectangular matrices are padded internally; gated pairs never match. When
    ``match_threshold`` is given, optimal pairs costing more than it are
    demoted to unmatched.

    Returns:
        ``(matches, unmatched_rows, unmatched_cols)`` with matches sorted by
        row index.
    """
    costs = np.asarray(costs, dtype=float)
    n_rows, n_cols = costs.shape if costs.ndim == 2 else (0, 0)
    if n_rows == 0 or n_cols == 0 or not np.any(np.isfinite(costs)):
        return [], list(range(n_rows)), list(range(n_cols))

    # Pad to square; BIG stands in for gated and padded cells. It must dwarf
    # any achievable real total so that real matches are always preferred.
    n = max(n_rows, n_cols)
    finite_max = float(np.max(np.abs(costs[np.isfinite(costs)])))
    big = max(1e6, 1e4 * n * (finite_max + 1.0))
    padded = np.full((n, n), big)
    finite = np.isfinite(costs)
    padded[:n_rows, :n_cols][finite] = costs[finite]

    assigned = _solve_square(padded)
    matches: list[tuple[int, int]] = []
    for r in range(n_rows):
        c = assigned[r]
        if c >= n_cols or not finite[r, c]:
            continue
        if match_threshold is not None and costs[r, c] > match_threshold:
            continue
        matches.append((r, c))
    matched_rows = {r for r, _ in matches}
    matched_cols = {c for _, c in matches}
    unmatched_rows = [r for r in range(n_rows) if r not in matched_rows]
    unmatched_cols = [c for c in range(n_cols) if c not in matched_cols]
    return matches, unmatched_rows, unmatched_cols
