"""Scoring predicted label maps against ground truth.

The headline metric is SEG: every true region is matched to the predicted
region with the largest overlap, scored by Jaccard if that overlap covers a
strict majority of the true region, 0 otherwise, then averaged.  Background
never participates.
"""

from dataclasses import dataclass

import numpy as np


def jaccard(a, b):
    """Intersection over union of two boolean pixel masks.

    a must be nonempty; an empty b scores 0.
    """
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError("shape mismatch: %s vs %s" % (a.shape, b.shape))
    n_a = int(a.sum())
    if n_a == 0:
        raise ValueError("first region is empty")
    inter = int((a & b).sum())
    union = n_a + int(b.sum()) - inter
    return inter / union


@dataclass
class RegionMatch:
    true_id: int
    pred_id: int  # 0 when nothing won the majority vote
    overlap: int
    jaccard: float


def region_matches(truth, pred):
    """Best-overlap match for every true region.

    A true region only counts as matched when the winning predicted region
    covers strictly more than half of it (the strict-majority rule); ties
    between predicted regions go to the smaller label.
    """
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape:
        raise ValueError("shape mismatch: %s vs %s" % (truth.shape, pred.shape))
    t = truth.ravel()
    p = pred.ravel()
    sel = t > 0
    if not sel.any():
        raise ValueError("truth has no regions")
    t_ids, t_idx = np.unique(t[sel], return_inverse=True)
    p_ids, p_idx = np.unique(p[sel], return_inverse=True)
    counts = np.bincount(
        t_idx * len(p_ids) + p_idx, minlength=len(t_ids) * len(p_ids)
    ).reshape(len(t_ids), len(p_ids))
    t_areas = counts.sum(axis=1)

    # full predicted-region areas, needed for the union
    full_ids, full_areas = np.unique(p, return_counts=True)
    area_of = dict(zip(full_ids.tolist(), full_areas.tolist()))

    matches = []
    for i, tid in enumerate(t_ids):
        row = counts[i]
        best_j = -1
        best_overlap = 0
        for j, pid in enumerate(p_ids):
            if pid == 0:
                continue
            if row[j] > best_overlap:  # ties keep the earlier (smaller) label
                best_overlap = int(row[j])
                best_j = j
        if best_j >= 0 and 2 * best_overlap > int(t_areas[i]):
            pid = int(p_ids[best_j])
            union = int(t_areas[i]) + area_of[pid] - best_overlap
            matches.append(RegionMatch(int(tid), pid, best_overlap, best_overlap / union))
        else:
            matches.append(RegionMatch(int(tid), 0, best_overlap, 0.0))
    return matches


def seg_score(truth, pred):
    """Mean Jaccard over true regions under the strict-majority match rule."""
    matches = region_matches(truth, pred)
    # summed in value order so the result is exactly relabel-invariant
    return float(np.mean(np.sort([m.jaccard for m in matches])))


@dataclass
class SegReport:
    rows: list  # (stem, n_true_regions, seg)
    aggregate: float

    def lines(self):
        out = ["image\tregions\tseg"]
        for stem, n, seg in self.rows:
            out.append("%s\t%d\t%.4f" % (stem, n, seg))
        out.append("AGGREGATE\t%d\t%.4f" % (sum(n for _, n, _ in self.rows), self.aggregate))
        return out

    def to_text(self):
        return "\n".join(self.lines()) + "\n"


def seg_report(truth_set, pred_set):
    """Per-image SEG plus the region-count-weighted dataset aggregate.

    truth_set/pred_set map stems to label maps.  Every truth stem needs a
    prediction; extra predictions are ignored.
    """
    missing = sorted(set(truth_set) - set(pred_set))
    if missing:
        raise ValueError("no prediction for: %s" % ", ".join(missing))
    if not truth_set:
        raise ValueError("empty truth set")
    rows = []
    weighted = 0.0
    total_regions = 0
    for stem in sorted(truth_set):
        truth = np.asarray(truth_set[stem])
        n_regions = len(np.unique(truth[truth > 0]))
        seg = seg_score(truth, pred_set[stem])
        rows.append((stem, n_regions, seg))
        weighted += n_regions * seg
        total_regions += n_regions
    return SegReport(rows=rows, aggregate=weighted / total_regions)
