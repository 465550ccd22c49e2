"""Turning images + labels into network inputs.

Covers brightness normalization, multi-scale patch extraction, the training
sample plan (fraction + class balance bookkeeping), dihedral augmentation,
and batch assembly.  Everything downstream of the raw rasters and upstream
of the network lives here.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import geometry

log = logging.getLogger("pixelseg.sampler")

PATCH_SIDE = 25

# Patch anchor convention, locked by the equivariance tests: the window at
# scale s has side 25*s with its top-left corner at center - (12*s + (s-1)//2),
# which puts the center pixel inside block 12 of 25.  For odd s the window is
# exactly centered; even scales are allowed but sit half a pixel off-center.
_HALF_BLOCKS = 12


def _anchor_offset(scale):
    return _HALF_BLOCKS * scale + (scale - 1) // 2


def normalize_image(image, aoi=None):
    """Normalize to mean 0, population std 1 over the AOI-true pixels.

    The affine correction is applied to the whole image so patches may
    still read beyond the AOI.  Degenerate images (std below 1e-12) come
    back all zero.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.size == 0:
        raise ValueError("image is empty")
    sel = image if aoi is None else image[np.asarray(aoi, dtype=bool)]
    if sel.size == 0:
        raise ValueError("AOI excludes every pixel")
    mean = sel.mean()
    std = sel.std()
    if std < 1e-12:
        return np.zeros_like(image)
    return (image - mean) / std


class PatchSource:
    """Patch extraction for one image at a fixed set of scales.

    Each scale keeps a reflect-padded copy of the image; scales above 1
    additionally keep a summed-area table so any block mean is four lookups.
    Scale 1 reads pixels directly, which keeps it bit-exact with the raw
    image.
    """

    def __init__(self, image, scales):
        image = np.asarray(image, dtype=np.float64)
        if image.ndim != 2:
            raise ValueError("image must be 2D")
        self.shape = image.shape
        self.scales = tuple(int(s) for s in scales)
        if any(s < 1 for s in self.scales):
            raise ValueError("scales must be >= 1")
        self._planes = {}
        for s in set(self.scales):
            pad = (_HALF_BLOCKS + 1) * s  # covers the window overhang on all sides
            padded = np.pad(image, pad, mode="reflect")
            if s == 1:
                self._planes[s] = (pad, padded, None)
            else:
                sat = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), np.float64)
                sat[1:, 1:] = padded.cumsum(axis=0).cumsum(axis=1)
                self._planes[s] = (pad, None, sat)

    def stacks(self, centers, dtype=np.float32):
        """(n, S, 25, 25) patch stacks for the given (row, col) centers.

        float32 by default (the network's precision); pass float64 to keep
        raw image values untouched at scale 1.
        """
        centers = np.atleast_2d(np.asarray(centers, dtype=np.int64))
        n = centers.shape[0]
        out = np.empty((n, len(self.scales), PATCH_SIDE, PATCH_SIDE), dtype)
        for si, s in enumerate(self.scales):
            pad, padded, sat = self._planes[s]
            base_r = centers[:, 0] + pad - _anchor_offset(s)
            base_c = centers[:, 1] + pad - _anchor_offset(s)
            if s == 1:
                rows = base_r[:, None] + np.arange(PATCH_SIDE)
                cols = base_c[:, None] + np.arange(PATCH_SIDE)
                vals = padded[rows[:, :, None], cols[:, None, :]]
            else:
                # block corners in summed-area coordinates
                rows = base_r[:, None] + s * np.arange(PATCH_SIDE + 1)
                cols = base_c[:, None] + s * np.arange(PATCH_SIDE + 1)
                corners = sat[rows[:, :, None], cols[:, None, :]]
                sums = (
                    corners[:, 1:, 1:]
                    - corners[:, :-1, 1:]
                    - corners[:, 1:, :-1]
                    + corners[:, :-1, :-1]
                )
                vals = sums / float(s * s)
            out[:, si] = vals
        return out


def extract_patch(image, center, scale):
    """One 25x25 patch: the side-25*scale window at center, block-averaged.

    Keeps the image precision, so at scale 1 the window comes back
    value-for-value.
    """
    src = PatchSource(image, (scale,))
    return src.stacks(np.asarray(center)[None, :], dtype=np.float64)[0, 0]


def extract_stack(image, center, scales):
    """All scales for one center, shape (S, 25, 25), image precision."""
    src = PatchSource(image, scales)
    return src.stacks(np.asarray(center)[None, :], dtype=np.float64)[0]


def augment(stack, orientation):
    """Apply one of the 8 square symmetries to the trailing two axes.

    orientation = k + 4*f encodes k quarter-turns (counterclockwise)
    followed by an optional up-down flip.  Works on single stacks and
    batches alike.
    """
    if not 0 <= orientation <= 7:
        raise ValueError("orientation must be 0..7, got %r" % (orientation,))
    out = np.asarray(stack)
    k = orientation % 4
    if k:
        out = np.rot90(out, k, axes=(-2, -1))
    if orientation >= 4:
        out = np.flip(out, axis=-2)
    return out


def transform_index(point, shape, orientation):
    """Where a pixel lands when its image is transformed by `augment`."""
    r, c = point
    h, w = shape
    k = orientation % 4
    for _ in range(k):
        r, c = w - 1 - c, r
        h, w = w, h
    if orientation >= 4:
        r = h - 1 - r
    return r, c


@dataclass
class SamplePlan:
    """A frozen draw of training pixels.

    entries rows are (image index, row, col, orientation).  Innies occupy
    the first n_innie rows; batch assembly reshuffles, so storage order
    carries no meaning beyond reproducibility.
    """

    entries: np.ndarray
    n_innie: int
    n_outie: int
    m_available: int
    fraction: float
    balance: float
    seed: int
    augmented: bool

    def __len__(self):
        return self.entries.shape[0]


def plan_counts(m_available, fraction, balance):
    """Sample counts: N = round(F*M), innies = round(b*N), outies = rest.

    Python round, so exact halves go to the even neighbor.
    """
    n = int(round(fraction * m_available))
    n_innie = int(round(balance * n))
    return n, n_innie, n - n_innie


def build_sample_plan(labels_list, aoi_list, fraction, balance, seed, augmented=True):
    """Draw the training pixel set from every image's AOI.

    Each class is drawn uniformly without replacement from its pool; a pool
    smaller than its quota falls back to drawing with replacement (logged).
    Requesting innies (balance > 0) from images that contain none is a hard
    error since the task would be untrainable.
    """
    if len(labels_list) != len(aoi_list):
        raise ValueError("labels/aoi list length mismatch")
    if not labels_list:
        raise ValueError("no training images")
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0,1]")
    if not 0 <= balance <= 1:
        raise ValueError("balance must be in [0,1]")

    innie_rows = []
    outie_rows = []
    for idx, (labels, aoi) in enumerate(zip(labels_list, aoi_list)):
        cls = geometry.classify_pixels(labels, aoi)
        for rows, code in ((innie_rows, geometry.INNIE), (outie_rows, geometry.OUTIE)):
            rc = np.argwhere(cls == code)
            if rc.size:
                rows.append(
                    np.column_stack([np.full(len(rc), idx, np.int64), rc.astype(np.int64)])
                )

    innie_pool = np.concatenate(innie_rows) if innie_rows else np.empty((0, 3), np.int64)
    outie_pool = np.concatenate(outie_rows) if outie_rows else np.empty((0, 3), np.int64)
    m_available = len(innie_pool) + len(outie_pool)
    if m_available == 0:
        raise ValueError("no AOI-true pixels available for training")

    n, n_innie, n_outie = plan_counts(m_available, fraction, balance)
    if balance > 0 and len(innie_pool) == 0:
        raise ValueError("no innie pixels available but balance > 0; nothing to learn")
    if n_outie > 0 and len(outie_pool) == 0:
        raise ValueError("no outie pixels available but the plan calls for %d" % n_outie)

    rng = np.random.default_rng(seed)
    picks = []
    for pool, quota, name in ((innie_pool, n_innie, "innie"), (outie_pool, n_outie, "outie")):
        if quota == 0:
            continue
        if len(pool) >= quota:
            chosen = rng.choice(len(pool), size=quota, replace=False)
        else:
            log.warning(
                "%s pool (%d) smaller than quota (%d); sampling with replacement",
                name, len(pool), quota,
            )
            chosen = rng.choice(len(pool), size=quota, replace=True)
        picks.append(pool[chosen])

    entries = np.concatenate(picks) if picks else np.empty((0, 3), np.int64)
    if augmented:
        orient = rng.integers(0, 8, size=len(entries), dtype=np.int64)
    else:
        orient = np.zeros(len(entries), np.int64)
    entries = np.column_stack([entries, orient])
    return SamplePlan(
        entries=entries,
        n_innie=n_innie,
        n_outie=n_outie,
        m_available=m_available,
        fraction=float(fraction),
        balance=float(balance),
        seed=int(seed),
        augmented=bool(augmented),
    )


def dump_plan(plan, path):
    """Write the plan one `image row col orientation` line at a time."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# image row col orientation  (n=%d innies=%d outies=%d seed=%d)\n"
                 % (len(plan), plan.n_innie, plan.n_outie, plan.seed))
        for img, r, c, o in plan.entries:
            fh.write("%d %d %d %d\n" % (img, r, c, o))


def assemble_batches(plan, images, labels_list, cap, batch_size, scales, rng, epochs=1):
    """Yield (stacks, class_targets, distance_targets) minibatches.

    images must already be normalized.  Targets come from the label maps:
    class 1 inside any segment, else 0; distance from the capped transform,
    so outies train toward 0.  Sample order is reshuffled every epoch from
    rng; batches per epoch = ceil(N / batch_size).
    """
    if len(plan) == 0:
        raise ValueError("empty sample plan")
    if plan.entries[:, 0].max() >= len(images):
        raise ValueError("plan references image %d but only %d images given"
                         % (plan.entries[:, 0].max(), len(images)))
    if len(images) != len(labels_list):
        raise ValueError("images/labels list length mismatch")

    sources = [PatchSource(img, scales) for img in images]
    dist_maps = [geometry.distance_map(lab, cap) for lab in labels_list]
    class_maps = [(np.asarray(lab) > 0).astype(np.float32) for lab in labels_list]

    n = len(plan)
    for _ in range(epochs):
        order = rng.permutation(n)
        for lo in range(0, n, batch_size):
            rows = plan.entries[order[lo:lo + batch_size]]
            b = len(rows)
            stacks = np.empty((b, len(scales), PATCH_SIDE, PATCH_SIDE), np.float32)
            class_t = np.empty(b, np.float32)
            dist_t = np.empty(b, np.float32)
            for img_i in np.unique(rows[:, 0]):
                sel = rows[:, 0] == img_i
                centers = rows[sel, 1:3]
                stacks[sel] = sources[img_i].stacks(centers)
                class_t[sel] = class_maps[img_i][centers[:, 0], centers[:, 1]]
                dist_t[sel] = dist_maps[img_i][centers[:, 0], centers[:, 1]]
            for o in range(1, 8):
                sel = rows[:, 3] == o
                if sel.any():
                    stacks[sel] = augment(stacks[sel], o)
            yield stacks, class_t, dist_t
