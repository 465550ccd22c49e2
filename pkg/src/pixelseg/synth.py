"""Synthetic disk scenes with exact ground truth.

Generates the kind of imagery the pipeline is meant for (dense round
particles, uneven lighting, optional internal fringe patterns, noise, blur)
plus pixel-perfect label maps, so the whole stack can be exercised and
scored without any real data.  Fully deterministic per seed.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .project import save_gray, save_labels

log = logging.getLogger("pixelseg.synth")

_PLACEMENT_TRIES = 200


class PlacementError(RuntimeError):
    pass


@dataclass(frozen=True)
class SceneSpec:
    """Knobs for one synthetic scene.

    mode 'flat' fills each disk with one brightness; 'fringe' draws
    concentric rings (random spacing and phase per disk), a stand-in for
    the internal patterns of photoelastic particles.  Defaults are sized
    for a quick demo rather than a benchmark.
    """

    height: int = 128
    width: int = 128
    n_min: int = 10
    n_max: int = 18
    r_min: float = 6.0
    r_max: float = 13.0
    max_overlap: float = 0.15
    gradient: float = 0.15
    mode: str = "fringe"
    noise: float = 0.02
    blur: float = 0.5
    seed: int = 0

    def validate(self):
        if self.height < 64 or self.width < 64:
            raise ValueError("canvas must be at least 64x64")
        if self.r_min < 2:
            raise ValueError("radii must be at least 2 px")
        if self.r_min > self.r_max:
            raise ValueError("radius range is empty")
        if not 0 <= self.n_min <= self.n_max:
            raise ValueError("bad particle count range")
        if not 0 <= self.max_overlap < 1:
            raise ValueError("max_overlap must be in [0,1)")
        if self.mode not in ("flat", "fringe"):
            raise ValueError("mode must be 'flat' or 'fringe', got %r" % (self.mode,))
        if self.noise < 0 or self.blur < 0:
            raise ValueError("noise and blur must be nonnegative")
        return self


def place_disks(spec, rng):
    """Rejection-sample disk geometry: a list of (cy, cx, r).

    Consumes rng draws in a fixed order, so replaying with an equally
    seeded generator reproduces the geometry exactly.  Each disk must keep
    its overlap with already-placed disks at or below max_overlap of its
    own area.
    """
    spec.validate()
    h, w = spec.height, spec.width
    yy, xx = np.indices((h, w))
    occupied = np.zeros((h, w), bool)
    n = int(rng.integers(spec.n_min, spec.n_max + 1))
    disks = []
    for i in range(n):
        for _ in range(_PLACEMENT_TRIES):
            r = float(rng.uniform(spec.r_min, spec.r_max))
            cy = float(rng.uniform(r, h - 1 - r))
            cx = float(rng.uniform(r, w - 1 - r))
            cand = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
            area = int(cand.sum())
            if area == 0:
                continue
            overlap = int((cand & occupied).sum()) / area
            if overlap <= spec.max_overlap:
                occupied |= cand
                disks.append((cy, cx, r))
                break
        else:
            raise PlacementError(
                "could not place particle %d of %d after %d tries; "
                "lower the count, size, or raise max_overlap" % (i + 1, n, _PLACEMENT_TRIES)
            )
    return disks


def generate_scene(spec, rng=None):
    """Render one scene; returns (image float64, labels int32).

    Later disks overwrite earlier ones on contested pixels, in both the
    label map and the rendering, so labels always partition the canvas.
    """
    spec.validate()
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    h, w = spec.height, spec.width
    yy, xx = np.indices((h, w))
    disks = place_disks(spec, rng)

    labels = np.zeros((h, w), np.int32)
    image = np.full((h, w), 0.12)
    for i, (cy, cx, r) in enumerate(disks, start=1):
        rr2 = (yy - cy) ** 2 + (xx - cx) ** 2
        cand = rr2 <= r * r
        labels[cand] = i
        if spec.mode == "flat":
            image[cand] = rng.uniform(0.45, 0.85)
        else:
            base = rng.uniform(0.55, 0.8)
            period = rng.uniform(4.0, 9.0)
            phase = rng.uniform(0.0, 2.0 * math.pi)
            rings = 0.55 + 0.45 * np.cos(2.0 * math.pi * np.sqrt(rr2[cand]) / period + phase)
            image[cand] = base * rings

    if spec.gradient > 0:
        theta = rng.uniform(0.0, 2.0 * math.pi)
        ramp = ((xx - w / 2.0) * math.cos(theta) + (yy - h / 2.0) * math.sin(theta))
        image = image + spec.gradient * ramp / max(h, w)
    if spec.blur > 0:
        image = ndimage.gaussian_filter(image, spec.blur)
    if spec.noise > 0:
        image = image + rng.normal(0.0, spec.noise, size=(h, w))
    return image, labels


def _write_image(path, image):
    scaled = np.round(np.clip(image, 0.0, 1.0) * 65535.0).astype(np.uint16)
    save_gray(path, scaled)


def generate_dataset(spec, n_images, split, layout):
    """Fill an initialized project with image/mask pairs and a manifest.

    The first round(n_images*split) stems train; the rest are test images.
    Ground-truth masks for the test stems also land in train_masks, which
    is where evaluation looks for truth (stems never collide).  Each image
    uses an rng seeded by (spec.seed, index), so the same spec writes the
    same bytes twice.
    """
    if not layout.is_initialized():
        raise RuntimeError("project is not initialized: %s" % layout.root)
    if n_images < 1:
        raise ValueError("n_images must be >= 1")
    n_train = int(round(n_images * split))
    manifest = [
        "n_images = %d" % n_images,
        "split = %g" % split,
        "seed = %d" % spec.seed,
    ]
    for i in range(n_images):
        rng = np.random.default_rng([spec.seed, i])
        image, labs = generate_scene(spec, rng)
        stem = "synth_%03d" % i
        role = "train" if i < n_train else "test"
        img_dir = layout.train_images if role == "train" else layout.test_images
        _write_image(img_dir / (stem + ".png"), image)
        save_labels(layout.train_masks / (stem + ".png"), labs)
        manifest.append("%s = %s" % (stem, role))
        log.info("wrote %s scene %s (%d regions)", role, stem, int(labs.max()))
    (layout.root / "synth_manifest.txt").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    return n_train, n_images - n_train
