"""Independent reference implementations used to check the real modules.

Everything here is deliberately naive (enumeration, closed forms) and shares
no code with the package beyond basic types.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# -- assignment ---------------------------------------------------------------


def brute_force_lap(cost: np.ndarray) -> tuple[int, float, list[tuple[int, int]]]:
    """Best one-to-one matching over finite entries by full enumeration.

    Maximizes cardinality first, then minimizes the summed cost (totals
    accumulated in row order). Returns (cardinality, total, matches).
    """
    n_rows, n_cols = cost.shape
    best = (-1, math.inf, None)
    cols = list(range(n_cols)) + [None] * n_rows

    def extend(row: int, used: set[int], chosen: list[tuple[int, int]]):
        nonlocal best
        if row == n_rows:
            count = len(chosen)
            total = 0.0
            for r, c in chosen:
                total += cost[r, c]
            key = (-count, total)
            if key < (-best[0], best[1]):
                best = (count, total, list(chosen))
            return
        extend(row + 1, used, chosen)  # leave row unmatched
        for c in range(n_cols):
            if c in used or not math.isfinite(cost[row, c]):
                continue
            used.add(c)
            chosen.append((row, c))
            extend(row + 1, used, chosen)
            chosen.pop()
            used.remove(c)

    extend(0, set(), [])
    return best


def brute_force_lap_total(cost: np.ndarray) -> float:
    """Minimum full-cardinality total of a finite matrix via permutations."""
    n_rows, n_cols = cost.shape
    if n_rows > n_cols:
        return brute_force_lap_total(cost.T)
    best = math.inf
    for perm in itertools.permutations(range(n_cols), n_rows):
        total = 0.0
        for r, c in enumerate(perm):
            total += cost[r, c]
        if total < best:
            best = total
    return best


# -- scalar Kalman ------------------------------------------------------------


class ScalarKalman:
    """Closed-form 1-D position/velocity filter for cross-checking."""

    def __init__(self, x0: float, p_pos: float, p_vel: float):
        self.mean = np.array([x0, 0.0])
        self.cov = np.diag([p_pos, p_vel])

    def predict(self, q_pos: float, q_vel: float) -> None:
        f = np.array([[1.0, 1.0], [0.0, 1.0]])
        self.mean = f @ self.mean
        self.cov = f @ self.cov @ f.T + np.diag([q_pos, q_vel])

    def update(self, z: float, r: float) -> None:
        s = self.cov[0, 0] + r
        k = self.cov[:, 0] / s
        self.mean = self.mean + k * (z - self.mean[0])
        i_kh = np.eye(2)
        i_kh[:, 0] -= k
        self.cov = i_kh @ self.cov @ i_kh.T + np.outer(k, k) * r


# -- identity assignment -------------------------------------------------------


def brute_force_identity(
    intervals: list[tuple[int, int]],
    scores: np.ndarray,
) -> tuple[float, int, tuple[int, ...]]:
    """Enumerate every identity assignment; maximize objective, then count,
    then prefer the lexicographically smallest choice vector (index order,
    n_ids = unassigned). Objectives accumulate in index order so the floats
    are bit-comparable with a solver summing the same way.
    """
    n_t, n_ids = scores.shape
    if n_t == 0:
        return 0.0, 0, ()
    total_choices = (n_ids + 1) ** n_t
    # C-order unravel enumerates choice vectors in lexicographic order
    choices = np.stack(
        np.unravel_index(np.arange(total_choices), [n_ids + 1] * n_t), axis=1
    ).astype(np.int8)
    feasible = np.ones(total_choices, dtype=bool)
    for a in range(n_t):
        for b in range(a + 1, n_t):
            sa, ea = intervals[a]
            sb, eb = intervals[b]
            if sa <= eb and sb <= ea:
                same = (choices[:, a] == choices[:, b]) & (choices[:, a] < n_ids)
                feasible &= ~same
    padded = np.hstack([scores, np.zeros((n_t, 1))])
    totals = np.zeros(total_choices)
    for t in range(n_t):
        totals += padded[t, choices[:, t]]
    counts = (choices < n_ids).sum(axis=1)
    best_total = totals[feasible].max()
    mask = feasible & (totals == best_total)
    best_count = counts[mask].max()
    mask &= counts == best_count
    idx = int(np.argmax(mask))  # first hit = lexicographically smallest
    # recompute the winning total in index order with plain float adds
    total = 0.0
    for t in range(n_t):
        if choices[idx, t] < n_ids:
            total += float(scores[t, choices[idx, t]])
    return total, int(best_count), tuple(int(c) for c in choices[idx])


_PERM_CACHE: dict[tuple[int, int], np.ndarray] = {}


def lap_min_total(cost: np.ndarray) -> float:
    """Vectorized permutation brute force (all entries finite).

    Returns the correctly-rounded (fsum) total of the best permutation, so
    callers can compare against their own fsum with tolerance zero.
    """
    n_rows, n_cols = cost.shape
    if n_rows > n_cols:
        return lap_min_total(np.ascontiguousarray(cost.T))
    key = (n_rows, n_cols)
    if key not in _PERM_CACHE:
        _PERM_CACHE[key] = np.array(
            list(itertools.permutations(range(n_cols), n_rows)), dtype=np.intp
        )
    perms = _PERM_CACHE[key]
    totals = cost[np.arange(n_rows)[None, :], perms].sum(axis=1)
    best = perms[int(np.argmin(totals))]
    return math.fsum(cost[r, c] for r, c in enumerate(best))


# -- CLEAR metrics -------------------------------------------------------------


def _iou(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (aw * ah + bw * bh - inter)


def _best_frame_matching(gts, hyps, thr):
    """All injective matchings by recursion; max count, then max total IoU."""
    best = (-1, -math.inf, None)

    def extend(i, used, chosen, total):
        nonlocal best
        if i == len(gts):
            key = (len(chosen), total)
            if key > (best[0], best[1]):
                best = (len(chosen), total, dict(chosen))
            return
        extend(i + 1, used, chosen, total)
        for j, h in enumerate(hyps):
            if j in used:
                continue
            overlap = _iou(gts[i][1], h[1])
            if overlap >= thr:
                used.add(j)
                chosen.append((gts[i][0], h[0]))
                extend(i + 1, used, chosen, total + overlap)
                chosen.pop()
                used.remove(j)

    extend(0, set(), [], 0.0)
    return best[2] or {}


def naive_clear(gt_frames, hyp_frames, thr=0.5):
    """Frame-by-frame CLEAR tallies with enumeration matching.

    ``gt_frames``: {frame: [(gt_id, (x, y, w, h), identity)]};
    ``hyp_frames``: {frame: [(hyp_id, (x, y, w, h), identity)]}.
    Returns dict with fp, fn, idsw, gt, matched, id_correct.
    """
    last = {}
    fp = fn = idsw = gt_count = matched = id_correct = 0
    for frame in sorted(set(gt_frames) | set(hyp_frames)):
        gts = sorted(gt_frames.get(frame, []), key=lambda e: e[0])
        hyps = sorted(hyp_frames.get(frame, []), key=lambda e: e[0])
        hyp_by_id = {h[0]: h for h in hyps}
        matches = {}
        claimed = set()
        for gid, box, _identity in gts:
            j = last.get(gid)
            if j is None or j in claimed or j not in hyp_by_id:
                continue
            if _iou(box, hyp_by_id[j][1]) >= thr:
                matches[gid] = j
                claimed.add(j)
        rem_g = [g for g in gts if g[0] not in matches]
        rem_h = [h for h in hyps if h[0] not in claimed]
        matches.update(_best_frame_matching(rem_g, rem_h, thr))
        for gid, _box, identity in gts:
            j = matches.get(gid)
            if j is None:
                continue
            if last.get(gid) is not None and last[gid] != j:
                idsw += 1
            last[gid] = j
            matched += 1
            if hyp_by_id[j][2] == identity:
                id_correct += 1
        gt_count += len(gts)
        fn += len(gts) - len(matches)
        fp += len(hyps) - len(matches)
    return {
        "fp": fp,
        "fn": fn,
        "idsw": idsw,
        "gt": gt_count,
        "matched": matched,
        "id_correct": id_correct,
    }


def naive_idf1(gt_frames, hyp_frames, thr=0.5):
    """IDTP via enumeration over injective trajectory mappings."""
    overlap = {}
    total_gt = sum(len(v) for v in gt_frames.values())
    total_hyp = sum(len(v) for v in hyp_frames.values())
    for frame, gts in gt_frames.items():
        for gid, gbox, _ in gts:
            for hid, hbox, _ in hyp_frames.get(frame, []):
                if _iou(gbox, hbox) >= thr:
                    overlap[(gid, hid)] = overlap.get((gid, hid), 0) + 1
    gt_ids = sorted({g[0] for gts in gt_frames.values() for g in gts})
    hyp_ids = sorted({h[0] for hyps in hyp_frames.values() for h in hyps})
    best = 0

    def extend(i, used, total):
        nonlocal best
        if i == len(gt_ids):
            best = max(best, total)
            return
        extend(i + 1, used, total)
        for h in hyp_ids:
            if h in used:
                continue
            used.add(h)
            extend(i + 1, used, total + overlap.get((gt_ids[i], h), 0))
            used.remove(h)

    extend(0, set(), 0)
    idtp = best
    idfp = total_hyp - idtp
    idfn = total_gt - idtp
    idf1 = 2 * idtp / (2 * idtp + idfp + idfn) if (idtp + idfp + idfn) else 1.0
    return idtp, idfp, idfn, idf1
