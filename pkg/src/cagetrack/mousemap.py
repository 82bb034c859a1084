"""Global tracklet-to-identity assignment.

Tracklets compete for a finite set of identities under interval-scheduling
rules: each tracklet takes at most one identity, tracklets sharing an
identity must not overlap in time, and the winning assignment maximizes the
summed ear-tag classifier confidence. Only the identity-bearing classes
contribute to the objective; no-read / no-ear-tag mass is identity-neutral.

The solver is exact branch-and-bound: tracklets are explored in descending
best-score order, with the remaining suffix bounded by its per-tracklet best
scores. Desk-scale instances (tens of tracklets, three identities) solve in
microseconds, so no external solver is needed.

A pre-solver cleans up the unbounded hypothesis set the tracker can produce:
fragments that overlap in space but not in time are stitched back together,
and when more hypotheses stay simultaneously active than there are
identities, only the most probable ones per conflict window are kept.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import center_distance
from .types import IDENTITY_CLASSES, EarTagClass, Tracklet

logger = logging.getLogger(__name__)

DEFAULT_GAP_MAX = 90
DEFAULT_DIST_MAX_RATIO = 0.5
DEFAULT_CONTINUITY_BONUS = 0.1

Interval = tuple[int, int]


@dataclass(frozen=True)
class AssignmentProblem:
    """Tracklets, the identities in play, and the score of each pairing."""

    tracklets: tuple[Tracklet, ...]
    identities: tuple[EarTagClass, ...] = IDENTITY_CLASSES

    def score_matrix(self) -> np.ndarray:
        """(T, N) matrix of per-class summed confidences; all entries >= 0."""
        cols = [i.index for i in self.identities]
        if not self.tracklets:
            return np.zeros((0, len(cols)))
        return np.stack([t.class_conf_sums[cols] for t in self.tracklets])


@dataclass
class IdentityAssignment:
    """Solver output: tracklet id -> identity (or None), plus the objective."""

    assignment: dict[int, EarTagClass | None]
    objective: float


def _intervals_disjoint(a: Interval, b: Interval) -> bool:
    return a[1] < b[0] or b[1] < a[0]


def solve(
    problem: AssignmentProblem,
    score_override: np.ndarray | None = None,
    blocked: dict[int, list[Interval]] | None = None,
) -> IdentityAssignment:
    """Find the globally optimal feasible assignment.

    Ties in the objective prefer assignments with more tracklets assigned,
    then the lexicographically lowest identity choice in tracklet-id order
    (Unassigned sorting last), so results are reproducible.

    ``score_override`` substitutes the score matrix (used by windowed solving
    to add continuity bonuses); ``blocked`` seeds per-identity intervals that
    are already taken and must stay disjoint from new assignments. The
    returned objective always sums the given scores of assigned tracklets.
    """
    tracklets = problem.tracklets
    n_ids = len(problem.identities)
    n_t = len(tracklets)
    scores = problem.score_matrix() if score_override is None else np.asarray(score_override, dtype=float)
    if scores.shape != (n_t, n_ids):
        raise ValueError(f"score matrix shape {scores.shape}, expected {(n_t, n_ids)}")
    if np.any(scores < 0):
        raise ValueError("scores must be non-negative")
    if n_t == 0:
        return IdentityAssignment(assignment={}, objective=0.0)

    intervals = [(t.start_frame, t.end_frame) for t in tracklets]
    row_best = scores.max(axis=1)
    order = sorted(range(n_t), key=lambda t: (-row_best[t], tracklets[t].id))
    # bound for the unexplored suffix: every remaining tracklet at its best
    suffix = [0.0] * (n_t + 1)
    for k in range(n_t - 1, -1, -1):
        suffix[k] = suffix[k + 1] + row_best[order[k]]

    id_rank = sorted(range(n_t), key=lambda t: tracklets[t].id)
    taken: list[list[Interval]] = [list((blocked or {}).get(i, [])) for i in range(n_ids)]
    chosen: list[int] = [n_ids] * n_t  # identity index per tracklet, n_ids = unassigned
    best: list = [None]  # (objective, count, lex, chosen copy)

    def canonical_objective(assign: list[int]) -> float:
        total = 0.0
        for t in id_rank:
            if assign[t] < n_ids:
                total += float(scores[t, assign[t]])
        return total

    def consider_leaf(count: int) -> None:
        obj = canonical_objective(chosen)
        lex = tuple(chosen[t] for t in id_rank)
        cur = best[0]
        if (
            cur is None
            or obj > cur[0]
            or (obj == cur[0] and (count > cur[1] or (count == cur[1] and lex < cur[2])))
        ):
            best[0] = (obj, count, lex, list(chosen))

    def descend(k: int, partial: float, count: int) -> None:
        cur = best[0]
        if cur is not None and partial + suffix[k] < cur[0]:
            return
        if k == n_t:
            consider_leaf(count)
            return
        t = order[k]
        span = intervals[t]
        for i in range(n_ids):
            if all(_intervals_disjoint(span, other) for other in taken[i]):
                taken[i].append(span)
                chosen[t] = i
                descend(k + 1, partial + float(scores[t, i]), count + 1)
                taken[i].pop()
        chosen[t] = n_ids
        descend(k + 1, partial, count)

    descend(0, 0.0, 0)
    obj, _count, _lex, final = best[0]
    assignment = {
        tracklets[t].id: (problem.identities[final[t]] if final[t] < n_ids else None)
        for t in range(n_t)
    }
    _check_feasible(problem, assignment, blocked)
    return IdentityAssignment(assignment=assignment, objective=obj)


def _check_feasible(
    problem: AssignmentProblem,
    assignment: dict[int, EarTagClass | None],
    blocked: dict[int, list[Interval]] | None,
) -> None:
    per_identity: dict[int, list[Interval]] = {
        i: list((blocked or {}).get(i, [])) for i in range(len(problem.identities))
    }
    for t in problem.tracklets:
        identity = assignment[t.id]
        if identity is None:
            continue
        i = problem.identities.index(identity)
        span = (t.start_frame, t.end_frame)
        if any(not _intervals_disjoint(span, other) for other in per_identity[i]):
            raise RuntimeError(f"solver produced overlapping assignment for {identity}")
        per_identity[i].append(span)


# -- pre-solver -----------------------------------------------------------


def stitch(
    a: Tracklet,
    b: Tracklet,
    gap_max: int = DEFAULT_GAP_MAX,
    dist_max_ratio: float = DEFAULT_DIST_MAX_RATIO,
) -> Tracklet | None:
    """Merge two fragments broken by a tracking gap, or return None.

    ``a`` must end strictly before ``b`` starts. The merge happens when the
    frame gap is at most ``gap_max`` and the boundary boxes sit within
    ``dist_max_ratio`` times their mean diagonal of each other. The merged
    tracklet keeps ``a``'s id and concatenates observations (summing the
    per-class confidences).
    """
    if a.end_frame >= b.start_frame:
        raise ValueError("stitch requires a.end_frame < b.start_frame")
    if b.start_frame - a.end_frame > gap_max:
        return None
    last, first = a.observations[-1].box, b.observations[0].box
    dist_max = dist_max_ratio * (last.diagonal + first.diagonal) / 2.0
    if center_distance(last, first) > dist_max:
        return None
    return Tracklet.from_observations(a.id, a.observations + b.observations)


def _stitch_pass(tracklets: Sequence[Tracklet], gap_max: int, dist_max_ratio: float) -> list[Tracklet]:
    """Greedy left-to-right chaining of stitchable fragments."""
    pool: list[Tracklet] = []
    for b in sorted(tracklets, key=lambda t: (t.start_frame, t.id)):
        candidates = []
        for idx, a in enumerate(pool):
            if a.end_frame >= b.start_frame:
                continue
            merged = stitch(a, b, gap_max, dist_max_ratio)
            if merged is not None:
                gap = b.start_frame - a.end_frame
                dist = center_distance(a.observations[-1].box, b.observations[0].box)
                candidates.append((gap, dist, a.id, idx, merged))
        if candidates:
            _, _, _, idx, merged = min(candidates, key=lambda c: c[:3])
            pool[idx] = merged
        else:
            pool.append(b)
    return sorted(pool, key=lambda t: (t.start_frame, t.id))


def _concurrency_windows(tracklets: Sequence[Tracklet], limit: int) -> list[Interval]:
    """Maximal frame intervals where more than ``limit`` tracklets are active."""
    events: list[tuple[int, int]] = []
    for t in tracklets:
        events.append((t.start_frame, 1))
        events.append((t.end_frame + 1, -1))
    events.sort()
    windows: list[Interval] = []
    count = 0
    open_start: int | None = None
    for pos, delta in events:
        prev = count
        count += delta
        if prev <= limit < count and open_start is None:
            open_start = pos
        elif open_start is not None and count <= limit:
            windows.append((open_start, pos - 1))
            open_start = None
    return windows


def _mean_conf_in(t: Tracklet, window: Interval) -> float:
    confs = [o.conf for o in t.observations if window[0] <= o.frame <= window[1]]
    if not confs:
        confs = [o.conf for o in t.observations]
    return sum(confs) / len(confs)


def presolve(
    tracklets: Sequence[Tracklet],
    n_identities: int,
    gap_max: int = DEFAULT_GAP_MAX,
    dist_max_ratio: float = DEFAULT_DIST_MAX_RATIO,
) -> list[Tracklet]:
    """Reduce an over-full hypothesis set before solving.

    First stitches fragments (which only merges temporally disjoint
    hypotheses, so it never raises concurrency); then, while more than
    ``n_identities`` hypotheses remain simultaneously active anywhere, drops
    the least probable one (lowest mean detection confidence over the
    earliest conflict window) until the profile fits.
    """
    merged = _stitch_pass(tracklets, gap_max, dist_max_ratio)
    while True:
        windows = _concurrency_windows(merged, n_identities)
        if not windows:
            return merged
        window = windows[0]
        active = [t for t in merged if t.start_frame <= window[1] and t.end_frame >= window[0]]
        victim = min(active, key=lambda t: (_mean_conf_in(t, window), -t.id))
        logger.info(
            "presolve: dropping tracklet %d (mean conf %.3f in frames %d-%d)",
            victim.id, _mean_conf_in(victim, window), window[0], window[1],
        )
        merged = [t for t in merged if t.id != victim.id]


# -- batch / windowed orchestration ---------------------------------------


def assign_identities(
    tracklets: Sequence[Tracklet],
    identities: tuple[EarTagClass, ...] = IDENTITY_CLASSES,
    window_minutes: float | None = None,
    fps: float = 30.0,
    gap_max: int = DEFAULT_GAP_MAX,
    dist_max_ratio: float = DEFAULT_DIST_MAX_RATIO,
    continuity_bonus: float = DEFAULT_CONTINUITY_BONUS,
    run_presolve: bool = True,
) -> tuple[list[Tracklet], IdentityAssignment]:
    """Pre-solve the hypothesis set, then assign identities.

    ``window_minutes`` None or 0 solves the whole recording at once.
    Positive values solve consecutive windows in stream order, carrying the
    previous windows' assignments as hard interval blocks plus a soft
    continuity bonus toward the identity of any stitch-compatible
    predecessor. Returns the final (post-presolve) tracklets and the
    assignment; the objective is always the raw summed confidence of
    assigned tracklets.
    """
    final = presolve(tracklets, len(identities), gap_max, dist_max_ratio) if run_presolve else list(tracklets)
    final = sorted(final, key=lambda t: t.id)
    if not window_minutes:
        return final, solve(AssignmentProblem(tuple(final), identities))

    frames_per_window = max(1, int(round(window_minutes * 60.0 * fps)))
    base = min((t.start_frame for t in final), default=0)
    by_window: dict[int, list[Tracklet]] = {}
    for t in final:
        by_window.setdefault((t.start_frame - base) // frames_per_window, []).append(t)

    assignment: dict[int, EarTagClass | None] = {}
    assigned_so_far: list[tuple[Tracklet, EarTagClass]] = []
    for w in sorted(by_window):
        batch = sorted(by_window[w], key=lambda t: t.id)
        problem = AssignmentProblem(tuple(batch), identities)
        scores = problem.score_matrix()
        blocked: dict[int, list[Interval]] = {}
        for prev, identity in assigned_so_far:
            blocked.setdefault(identities.index(identity), []).append(
                (prev.start_frame, prev.end_frame)
            )
        for row, t in enumerate(batch):
            for prev, identity in assigned_so_far:
                if prev.end_frame >= t.start_frame:
                    continue
                if stitch(prev, t, gap_max, dist_max_ratio) is not None:
                    scores[row, identities.index(identity)] += continuity_bonus
        sub = solve(problem, score_override=scores, blocked=blocked)
        for t in batch:
            identity = sub.assignment[t.id]
            assignment[t.id] = identity
            if identity is not None:
                assigned_so_far.append((t, identity))

    objective = 0.0
    for t in final:
        identity = assignment[t.id]
        if identity is not None:
            objective += float(t.class_conf_sums[identity.index])
    result = IdentityAssignment(assignment=assignment, objective=objective)
    _check_feasible(AssignmentProblem(tuple(final), identities), assignment, None)
    return final, result
