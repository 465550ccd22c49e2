"""
How a segmentation gets its score
=================================

The evaluator is strict about one thing: a predicted region only counts
for a true region if it covers a strict majority of it.  Everything else
is plain Jaccard arithmetic.  Small hand-built maps make the rules easy
to see.
"""
import numpy as np

from pixelseg import evaluate

############################################################################
# Two true squares; the prediction nails one and covers exactly half of
# the other.  Half is not a majority, so the second square scores zero
# and the image scores 0.5.

truth = np.zeros((8, 8), np.int32)
truth[1:3, 1:3] = 1
truth[5:7, 5:7] = 2

pred = np.zeros_like(truth)
pred[1:3, 1:3] = 4          # label values never matter, only shapes
pred[5:7, 5:6] = 9
print("exact + half-covered:", evaluate.seg_score(truth, pred))

############################################################################
# per-region detail, the same matching the report aggregates

for m in evaluate.region_matches(truth, pred):
    print("true %d <- pred %d: overlap %d, jaccard %.2f"
          % (m.true_id, m.pred_id, m.overlap, m.jaccard))

############################################################################
# Jaccard on raw masks, no matching involved.

a = np.zeros((4, 4), bool)
b = np.zeros((4, 4), bool)
a[0:2, 0:4] = True
b[0:2, 0:3] = True
b[2, 0:2] = True
print("jaccard of 8px vs 8px sharing 6:", evaluate.jaccard(a, b))

############################################################################
# The report format `eval` writes: one row per image, region-weighted
# aggregate at the bottom.

report = evaluate.seg_report({"scene": truth}, {"scene": pred})
print()
print("\n".join(report.lines()))

############################################################################
# Relabeling the prediction cannot move the score: matching goes by
# shape, and the mean is summed in a fixed order.

perm = np.zeros_like(pred)
perm[pred == 4] = 71
perm[pred == 9] = 3
print("\nrelabel-invariant:",
      evaluate.seg_score(truth, perm) == evaluate.seg_score(truth, pred))
