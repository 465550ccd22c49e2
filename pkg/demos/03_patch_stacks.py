"""
What the network actually sees
==============================

Each pixel is classified from a stack of co-centered square windows, every
one resampled to 25x25.  Scale 1 is the raw neighborhood; scale 9 is a
225-pixel-wide context shrunk to the same grid.  This script pokes at the
extraction machinery directly.
"""
import numpy as np

from pixelseg import sampler

rng = np.random.default_rng(0)
image = rng.integers(0, 256, size=(80, 80)).astype(np.float64)

############################################################################
# One stack: shape (scales, 25, 25).  The center pixel of the scale-1
# window is the pixel being classified.

scales = (1, 3, 9)
stack = sampler.extract_stack(image, (40, 40), scales)
print("stack shape:", stack.shape)
print("center pixel:", stack[0, 12, 12], "== image[40,40]:", image[40, 40])

############################################################################
# Windows larger than the image are fine: reflection padding extends the
# canvas.  A corner pixel's scale-9 window is mostly mirrored content.

corner = sampler.extract_stack(image, (0, 0), scales)
print("corner stack finite:", np.isfinite(corner).all())

############################################################################
# Block averaging, not interpolation: the scale-3 window is the mean of
# 3x3 blocks, so a constant image stays exactly constant at every scale.

flat = np.full((40, 40), 7.0)
fstack = sampler.extract_stack(flat, (20, 20), scales)
print("constant image -> constant stacks:", np.unique(fstack).tolist())

############################################################################
# Training-time augmentation is the dihedral group: 4 rotations x optional
# flip, applied per scale.  Orientation 0 is identity.

aug = sampler.augment(stack, orientation=3)
print("orientation 3 == three rot90s:",
      np.array_equal(aug[0], np.rot90(stack[0], 3)))

############################################################################
# The bulk path precomputes summed-area tables per image, so extracting
# every stack in a region costs O(scales) per pixel, not O(window area).

src = sampler.PatchSource(image, scales)
centers = [(r, c) for r in range(10, 13) for c in range(10, 13)]
bulk = src.stacks(centers, dtype=np.float64)
one = sampler.extract_stack(image, centers[4], scales)
print("bulk == one-at-a-time:", np.array_equal(bulk[4], one))
