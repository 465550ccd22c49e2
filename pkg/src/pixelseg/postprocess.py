"""From network outputs to finished segmentations.

Runs the net over every AOI pixel, binarizes the probability map, seeds
markers at distance-map maxima, and grows regions with a priority flood
(watershed) so touching objects come apart along low-distance valleys.
Also owns the output file writer.
"""

import heapq
import logging
import struct
from pathlib import Path

import numpy as np
from numba import njit
from scipy import ndimage

from . import geometry, sampler, network

log = logging.getLogger("pixelseg.postprocess")

DIST_MAGIC = b"PXSGDIST"  # 16-byte header: magic, u32 rows, u32 cols

_PREDICT_BLOCK = 2048  # centers per extraction block; multiple of network.CHUNK


def predict_maps(params, image, aoi, config):
    """Probability and clamped distance maps over the AOI.

    image must already be normalized (sampler.normalize_image).  AOI-false
    pixels are 0 in both maps.  Scale count mismatches against the
    checkpoint surface as errors from the forward pass.
    """
    image = np.asarray(image, dtype=np.float64)
    aoi = np.asarray(aoi, dtype=bool)
    if image.shape != aoi.shape:
        raise ValueError("image shape %s vs aoi shape %s" % (image.shape, aoi.shape))
    prob = np.zeros(image.shape, np.float32)
    dist = np.zeros(image.shape, np.float32)
    coords = np.argwhere(aoi)
    if len(coords) == 0:
        return prob, dist
    source = sampler.PatchSource(image, config.scales)
    cap = np.float32(config.dist_cap)
    for lo in range(0, len(coords), _PREDICT_BLOCK):
        part = coords[lo:lo + _PREDICT_BLOCK]
        stacks = source.stacks(part)
        p, d = network.forward_batch(params, stacks)
        prob[part[:, 0], part[:, 1]] = p
        dist[part[:, 0], part[:, 1]] = np.clip(d, np.float32(0.0), cap)
    return prob, dist


def binarize(prob, threshold):
    """prob >= threshold: the inside/outside cut."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must be in (0,1), got %r" % (threshold,))
    return np.asarray(prob) >= threshold


@njit(cache=True)
def _plateau_components(dist, mask):
    """Label 8-connected equal-value plateaus inside mask.

    Returns (component map, per-component value, per-component is-max flag,
    centroid row sum, centroid col sum, pixel count).  A component is a
    local maximum when no member pixel has a strictly greater masked
    neighbor.
    """
    h, w = dist.shape
    comp = np.full((h, w), -1, np.int32)
    # worst case every masked pixel is its own plateau
    total = int(mask.sum())
    values = np.empty(total, dist.dtype)
    is_max = np.empty(total, np.bool_)
    sum_r = np.zeros(total, np.int64)
    sum_c = np.zeros(total, np.int64)
    count = np.zeros(total, np.int64)
    qr = np.empty(h * w, np.int32)
    qc = np.empty(h * w, np.int32)
    n_comp = 0
    for r0 in range(h):
        for c0 in range(w):
            if not mask[r0, c0] or comp[r0, c0] >= 0:
                continue
            cid = n_comp
            n_comp += 1
            v = dist[r0, c0]
            values[cid] = v
            is_max[cid] = True
            comp[r0, c0] = cid
            qr[0] = r0
            qc[0] = c0
            head = 0
            tail = 1
            while head < tail:
                r = qr[head]
                c = qc[head]
                head += 1
                sum_r[cid] += r
                sum_c[cid] += c
                count[cid] += 1
                for dr in range(-1, 2):
                    for dc in range(-1, 2):
                        if dr == 0 and dc == 0:
                            continue
                        nr = r + dr
                        nc = c + dc
                        if nr < 0 or nr >= h or nc < 0 or nc >= w:
                            continue
                        if not mask[nr, nc]:
                            continue
                        if dist[nr, nc] > v:
                            is_max[cid] = False
                        elif dist[nr, nc] == v and comp[nr, nc] < 0:
                            comp[nr, nc] = cid
                            qr[tail] = nr
                            qc[tail] = nc
                            tail += 1
    return comp, values[:n_comp], is_max[:n_comp], sum_r[:n_comp], sum_c[:n_comp], count[:n_comp]


@njit(cache=True)
def _plateau_representatives(comp, n_comp, sum_r, sum_c, count):
    """Member pixel closest to each plateau's centroid, row-major on ties."""
    h, w = comp.shape
    best_d2 = np.full(n_comp, np.inf)
    rep_r = np.full(n_comp, -1, np.int64)
    rep_c = np.full(n_comp, -1, np.int64)
    for r in range(h):
        for c in range(w):
            cid = comp[r, c]
            if cid < 0:
                continue
            cr = sum_r[cid] / count[cid]
            cc = sum_c[cid] / count[cid]
            d2 = (r - cr) ** 2 + (c - cc) ** 2
            if d2 < best_d2[cid]:
                best_d2[cid] = d2
                rep_r[cid] = r
                rep_c[cid] = c
    return rep_r, rep_c


def find_markers(dist, mask, min_sep, connectivity=8):
    """Watershed seeds: distance-map maxima, thinned to min_sep spacing.

    Equal-valued 8-connected plateaus collapse to the member pixel nearest
    their centroid.  Candidates are visited in descending value (row-major
    on ties) and kept only when at least min_sep away from every marker
    already kept in the same mask component; suppression never crosses
    components, so each connected blob keeps at least one seed and the
    watershed can label all of it.

    Returns a list of (row, col, value) in acceptance order.
    """
    if not min_sep > 0:
        raise ValueError("min_sep must be > 0")
    mask = np.ascontiguousarray(np.asarray(mask, dtype=bool))
    dist = np.ascontiguousarray(np.asarray(dist))
    if dist.shape != mask.shape:
        raise ValueError("dist shape %s vs mask shape %s" % (dist.shape, mask.shape))
    if not mask.any():
        return []
    comp, values, is_max, sum_r, sum_c, count = _plateau_components(dist, mask)
    rep_r, rep_c = _plateau_representatives(comp, len(values), sum_r, sum_c, count)
    cand = np.nonzero(is_max)[0]
    order = np.lexsort((rep_c[cand], rep_r[cand], -values[cand]))
    cand = cand[order]

    blobs = geometry.label_components(mask, connectivity)
    kept_by_blob = {}
    markers = []
    min_sep2 = float(min_sep) ** 2
    for cid in cand:
        r, c = int(rep_r[cid]), int(rep_c[cid])
        blob = int(blobs[r, c])
        kept = kept_by_blob.setdefault(blob, [])
        if any((r - kr) ** 2 + (c - kc) ** 2 < min_sep2 for kr, kc in kept):
            continue
        kept.append((r, c))
        markers.append((r, c, float(values[cid])))
    return markers


_NEIGHBORS_4 = ((-1, 0), (0, -1), (0, 1), (1, 0))
_NEIGHBORS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def watershed(mask, dist, markers, connectivity=8):
    """Priority flood of -dist from the markers, restricted to the mask.

    Pixels are claimed highest-distance-first; equal priorities resolve by
    queue insertion order, so the result is deterministic.  Every marker
    becomes one connected region.
    """
    mask = np.asarray(mask, dtype=bool)
    dist = np.asarray(dist)
    if dist.shape != mask.shape:
        raise ValueError("dist shape %s vs mask shape %s" % (dist.shape, mask.shape))
    labels = np.zeros(mask.shape, np.int32)
    if not mask.any():
        return labels
    if not markers:
        raise ValueError("mask is nonempty but no markers were given")
    offsets = _NEIGHBORS_8 if connectivity == 8 else _NEIGHBORS_4
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")

    h, w = mask.shape
    heap = []
    counter = 0
    for i, m in enumerate(markers):
        r, c = int(m[0]), int(m[1])
        if not (0 <= r < h and 0 <= c < w) or not mask[r, c]:
            raise ValueError("marker (%d,%d) is not inside the mask" % (r, c))
        if labels[r, c]:
            raise ValueError("duplicate marker at (%d,%d)" % (r, c))
        labels[r, c] = i + 1
        heapq.heappush(heap, (-float(dist[r, c]), counter, r, c))
        counter += 1
    while heap:
        _, _, r, c = heapq.heappop(heap)
        lab = labels[r, c]
        for dr, dc in offsets:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and mask[nr, nc] and labels[nr, nc] == 0:
                labels[nr, nc] = lab
                heapq.heappush(heap, (-float(dist[nr, nc]), counter, nr, nc))
                counter += 1
    if int((labels > 0).sum()) != int(mask.sum()):
        log.warning("watershed left %d mask pixels unlabeled (marker-free component?)",
                    int(mask.sum()) - int((labels > 0).sum()))
    return labels


# ---------------------------------------------------------------------------
# output files


def _save_prob_png(path, prob):
    from .project import save_gray

    scaled = np.round(np.clip(prob, 0.0, 1.0) * 65535.0).astype(np.uint16)
    save_gray(path, scaled)


def _save_dist_png(path, dist, cap):
    from .project import save_gray

    scaled = np.round(np.clip(dist / cap, 0.0, 1.0) * 65535.0).astype(np.uint16)
    save_gray(path, scaled)


def save_dist_f32(path, dist):
    """Lossless distance grid: 16-byte header (magic, rows, cols) + f32 LE."""
    dist = np.asarray(dist, dtype=np.float32)
    with open(path, "wb") as fh:
        fh.write(DIST_MAGIC)
        fh.write(struct.pack("<II", dist.shape[0], dist.shape[1]))
        fh.write(np.ascontiguousarray(dist, dtype="<f4").tobytes())


def load_dist_f32(path):
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16 or head[:8] != DIST_MAGIC:
            raise ValueError("not a distance grid file: %s" % path)
        rows, cols = struct.unpack("<II", head[8:])
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != rows * cols:
        raise ValueError("distance grid truncated: %s" % path)
    return data.reshape(rows, cols).copy()


def region_table(labels, dist):
    """Rows of (label, area, centroid_row, centroid_col, mean_distance)."""
    labels = np.asarray(labels)
    dist = np.asarray(dist, dtype=np.float64)
    rows = []
    if labels.size == 0 or labels.max() <= 0:
        return rows
    flat = labels.ravel()
    areas = np.bincount(flat)
    rr, cc = np.indices(labels.shape)
    sum_r = np.bincount(flat, weights=rr.ravel())
    sum_c = np.bincount(flat, weights=cc.ravel())
    sum_d = np.bincount(flat, weights=dist.ravel())
    for lab in range(1, len(areas)):
        a = int(areas[lab])
        if a == 0:
            continue
        rows.append((lab, a, sum_r[lab] / a, sum_c[lab] / a, sum_d[lab] / a))
    return rows


def write_outputs(maps, labels, output_mode, outdir, stem, cap):
    """Write prediction files for one image, named <stem>_<kind>.

    maps is a dict with 'prob', 'dist', and 'mask' grids.  Modes: labels
    (label PNG + region table), binary (mask PNG), distance (scaled PNG +
    lossless .f32), all (everything plus the probability PNG).
    """
    from .project import save_gray, save_labels

    outdir = Path(outdir)
    written = []
    if output_mode not in ("labels", "binary", "distance", "all"):
        raise ValueError("unknown output mode %r" % (output_mode,))

    if output_mode in ("labels", "all"):
        p = outdir / ("%s_labels.png" % stem)
        save_labels(p, labels)
        written.append(p)
        p = outdir / ("%s_regions.txt" % stem)
        with open(p, "w", encoding="utf-8") as fh:
            fh.write("label\tarea\tcentroid_row\tcentroid_col\tmean_distance\n")
            for lab, area, cr, ccol, md in region_table(labels, maps["dist"]):
                fh.write("%d\t%d\t%.4f\t%.4f\t%.4f\n" % (lab, area, cr, ccol, md))
        written.append(p)
    if output_mode in ("binary", "all"):
        p = outdir / ("%s_mask.png" % stem)
        save_gray(p, np.where(maps["mask"], 255, 0).astype(np.uint8))
        written.append(p)
    if output_mode in ("distance", "all"):
        p = outdir / ("%s_dist.png" % stem)
        _save_dist_png(p, maps["dist"], cap)
        written.append(p)
        p = outdir / ("%s_dist.f32" % stem)
        save_dist_f32(p, maps["dist"])
        written.append(p)
    if output_mode == "all":
        p = outdir / ("%s_prob.png" % stem)
        _save_prob_png(p, maps["prob"])
        written.append(p)
    return written


def seed_field(dist, min_sep):
    """Denoised view of a predicted distance map, for marker seeding only.

    Regression noise turns the flat tops of large regions (where the cap
    saturates) into forests of spurious maxima that sit farther apart than
    min_sep, so the greedy filter cannot thin them.  Smoothing at half the
    separation scale removes exactly the structure the filter would want
    gone while leaving peaks that deserve to survive it.  The watershed
    flood still runs on the raw prediction.
    """
    return ndimage.gaussian_filter(np.asarray(dist, dtype=np.float64),
                                   0.5 * min_sep, mode="reflect")


def segment_image(params, image, aoi, config):
    """The whole inference pipeline for one normalized image.

    Returns (prob, dist, mask, labels).
    """
    prob, dist = predict_maps(params, image, aoi, config)
    mask = binarize(prob, config.threshold) & np.asarray(aoi, dtype=bool)
    markers = find_markers(seed_field(dist, config.min_marker_separation),
                           mask, config.min_marker_separation, config.connectivity)
    if mask.any():
        labels = watershed(mask, dist, markers, config.connectivity)
    else:
        labels = np.zeros(mask.shape, np.int32)
    return prob, dist, mask, labels
