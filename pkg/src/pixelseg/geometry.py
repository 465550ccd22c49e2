"""Label-map geometry: connected components, exact distance-to-edge, pixel classes.

Distances are true Euclidean, computed on integer squared distances (no
chamfer approximation), then capped.  All routines are deterministic.
"""

import math

import numpy as np
from numba import njit

# pixel classes used for sampling
INNIE = 1      # inside a segment, within the area of interest
OUTIE = 0      # background, within the area of interest
EXCLUDED = -1  # outside the area of interest


@njit(cache=True)
def _flood_label(mask, use_diagonals):
    # Row-major scan; each unlabeled foreground pixel seeds a breadth-first
    # flood.  Label order therefore follows first-encounter order.
    h, w = mask.shape
    lab = np.zeros((h, w), np.int32)
    qr = np.empty(h * w, np.int32)
    qc = np.empty(h * w, np.int32)
    nxt = 0
    for r in range(h):
        for c in range(w):
            if mask[r, c] and lab[r, c] == 0:
                nxt += 1
                lab[r, c] = nxt
                qr[0] = r
                qc[0] = c
                head = 0
                tail = 1
                while head < tail:
                    cr = qr[head]
                    cc = qc[head]
                    head += 1
                    for dr in range(-1, 2):
                        for dc in range(-1, 2):
                            if dr == 0 and dc == 0:
                                continue
                            if not use_diagonals and dr != 0 and dc != 0:
                                continue
                            nr = cr + dr
                            nc = cc + dc
                            if 0 <= nr < h and 0 <= nc < w and mask[nr, nc] and lab[nr, nc] == 0:
                                lab[nr, nc] = nxt
                                qr[tail] = nr
                                qc[tail] = nc
                                tail += 1
    return lab


def label_components(mask, connectivity=8):
    """Label connected components of a boolean mask.

    Returns an int32 map with background 0 and components numbered from 1
    in row-major first-encounter order.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8, got %r" % (connectivity,))
    mask = np.ascontiguousarray(np.asarray(mask, dtype=bool))
    if mask.ndim != 2:
        raise ValueError("mask must be 2D")
    return _flood_label(mask, connectivity == 8)


@njit(cache=True)
def _edt2_squared(feat):
    """Exact squared Euclidean distance to the nearest True pixel of feat.

    Two-pass algorithm: per-column vertical distances, then per-row lower
    envelope of parabolas.  Integer arithmetic throughout, so results are
    exact.  Pixels with no True pixel anywhere get a value >= (h+w)**2.
    """
    h, w = feat.shape
    inf = h + w
    g = np.empty((h, w), np.int64)
    for c in range(w):
        g[0, c] = 0 if feat[0, c] else inf
        for r in range(1, h):
            if feat[r, c]:
                g[r, c] = 0
            else:
                g[r, c] = g[r - 1, c] + 1 if g[r - 1, c] < inf else inf
        for r in range(h - 2, -1, -1):
            if g[r + 1, c] + 1 < g[r, c]:
                g[r, c] = g[r + 1, c] + 1

    d2 = np.empty((h, w), np.int64)
    s = np.empty(w, np.int64)  # indices of envelope parabolas
    t = np.empty(w, np.int64)  # where each parabola takes over
    for r in range(h):
        q = 0
        s[0] = 0
        t[0] = 0
        for u in range(1, w):
            # pop parabolas that u dominates at their takeover point
            while q >= 0:
                x = t[q]
                i = s[q]
                fi = (x - i) * (x - i) + g[r, i] * g[r, i]
                fu = (x - u) * (x - u) + g[r, u] * g[r, u]
                if fi > fu:
                    q -= 1
                else:
                    break
            if q < 0:
                q = 0
                s[0] = u
                t[0] = 0
            else:
                i = s[q]
                # first column where u beats i
                sep = (u * u - i * i + g[r, u] * g[r, u] - g[r, i] * g[r, i]) // (2 * (u - i))
                if sep + 1 < w:
                    q += 1
                    s[q] = u
                    t[q] = sep + 1
        for x in range(w - 1, -1, -1):
            i = s[q]
            d2[r, x] = (x - i) * (x - i) + g[r, i] * g[r, i]
            if x == t[q]:
                q -= 1
    return d2


@njit(cache=True)
def _label_bboxes(labels, max_label):
    r0 = np.full(max_label + 1, labels.shape[0], np.int64)
    r1 = np.full(max_label + 1, -1, np.int64)
    c0 = np.full(max_label + 1, labels.shape[1], np.int64)
    c1 = np.full(max_label + 1, -1, np.int64)
    for r in range(labels.shape[0]):
        for c in range(labels.shape[1]):
            k = labels[r, c]
            if k > 0:
                if r < r0[k]:
                    r0[k] = r
                if r > r1[k]:
                    r1[k] = r
                if c < c0[k]:
                    c0[k] = c
                if c > c1[k]:
                    c1[k] = c
    return r0, r1, c0, c1


def distance_map(labels, cap):
    """Capped Euclidean distance to the nearest differently-labeled pixel.

    For every pixel of every positive segment, the distance to the closest
    pixel that carries a different label (background counts as different,
    and so do other segments, so touching segments still see an edge).
    Values are clamped to cap; background stays 0.  Exact wherever the true
    distance is <= cap.

    A segment is only influenced by pixels within cap of its bounding box,
    so each segment is solved on a padded crop rather than the full grid.
    """
    labels = np.ascontiguousarray(np.asarray(labels))
    if labels.ndim != 2:
        raise ValueError("labels must be 2D")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError("labels must be integer")
    if labels.size and labels.min() < 0:
        raise ValueError("labels must be nonnegative")
    cap = float(cap)
    if not cap > 0:
        raise ValueError("cap must be positive")

    out = np.zeros(labels.shape, np.float64)
    if labels.size == 0:
        return out
    max_label = int(labels.max())
    if max_label == 0:
        return out

    h, w = labels.shape
    pad = int(math.ceil(cap)) + 1
    r0s, r1s, c0s, c1s = _label_bboxes(labels.astype(np.int64), max_label)
    for k in range(1, max_label + 1):
        if r1s[k] < 0:
            continue  # label value unused
        r0 = max(int(r0s[k]) - pad, 0)
        r1 = min(int(r1s[k]) + pad + 1, h)
        c0 = max(int(c0s[k]) - pad, 0)
        c1 = min(int(c1s[k]) + pad + 1, w)
        window = labels[r0:r1, c0:c1]
        inside = window == k
        d2 = _edt2_squared(~inside)
        vals = np.minimum(np.sqrt(d2[inside].astype(np.float64)), cap)
        block = out[r0:r1, c0:c1]
        block[inside] = vals
    return out


def classify_pixels(labels, aoi):
    """Per-pixel sampling class: INNIE, OUTIE, or EXCLUDED.

    labels: integer label map.  aoi: boolean area-of-interest mask of the
    same shape; pixels outside it are excluded from training and scoring.
    """
    labels = np.asarray(labels)
    aoi = np.asarray(aoi, dtype=bool)
    if labels.shape != aoi.shape:
        raise ValueError(
            "shape mismatch: labels %s vs aoi %s" % (labels.shape, aoi.shape)
        )
    out = np.full(labels.shape, EXCLUDED, np.int8)
    out[aoi & (labels > 0)] = INNIE
    out[aoi & (labels == 0)] = OUTIE
    return out
