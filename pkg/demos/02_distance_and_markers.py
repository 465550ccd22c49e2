"""
From label map to watershed, one array at a time
================================================

The post-processing half of the pipeline in miniature: a capped
distance-to-edge transform, local-maximum markers, and the priority flood
that turns a binary mask back into separated regions.  All on a grid small
enough to read as text.
"""
import numpy as np

from pixelseg import geometry, postprocess


def show(grid, fmt="%d"):
    for row in grid:
        print(" ".join(fmt % v for v in row))
    print()


############################################################################
# Two disks touching side by side under one shared mask.  This is the hard
# case: a plain connected-component pass sees a single blob.

yy, xx = np.indices((13, 19))
disk_a = (yy - 6) ** 2 + (xx - 5) ** 2 <= 16
disk_b = (yy - 6) ** 2 + (xx - 13) ** 2 <= 16
mask = disk_a | disk_b
show(mask.astype(int))

############################################################################
# The distance transform measures how deep each pixel sits.  Edges between
# differently-labeled pixels count, so it works on labels; a binary mask
# (what the network's thresholded output gives us) is the one-label case.
# The cap turns deep cores into flat plateaus, which is intended: beyond a
# few pixels, "how deep" carries no segmentation signal.

dist = geometry.distance_map(mask.astype(np.int32), cap=3.0)
show(dist.astype(int))

############################################################################
# Markers are the local maxima, thinned so no two sit closer than min_sep.
# Each disk keeps one: the deepest pixel of its core.

markers = postprocess.find_markers(dist, mask, min_sep=3.0)
for r, c, v in markers:
    print("marker at (%d,%d), depth %.1f" % (r, c, v))
print()

############################################################################
# The flood claims pixels in order of depth, deepest first, so the two
# cores grow toward each other and meet at the neck.

labels = postprocess.watershed(mask, dist, markers)
show(labels)

############################################################################
# Region accounting, the same table `predict` writes next to its PNGs.

for row in postprocess.region_table(labels, dist):
    print("label %d: area %d, centroid (%.1f, %.1f), mean depth %.2f" % row)
