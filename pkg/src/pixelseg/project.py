"""Project folders, the text config, and raster I/O.

A project is a directory with six fixed subfolders and a config.txt.  Users
drop images and masks into the folders and edit the config; nothing else is
required.  All knobs live in ProjectConfig; unknown keys in the file are an
error so typos never pass silently.
"""

import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .geometry import label_components

log = logging.getLogger("pixelseg.project")

CONFIG_NAME = "config.txt"
SUBDIRS = (
    "train_images",
    "train_masks",
    "areas_of_interest",
    "test_images",
    "models",
    "outputs",
)
SUPPORTED_EXTS = (".png", ".tif", ".tiff")

OUTPUT_MODES = ("labels", "binary", "distance", "all")

PATCH_SIDE = 25  # network input patch side, fixed by the architecture


class ConfigError(ValueError):
    pass


class ProjectError(RuntimeError):
    pass


class ProjectExistsError(ProjectError):
    pass


@dataclass
class ProjectConfig:
    """All tunables, mirroring config.txt key for key."""

    scales: tuple = (1, 3, 9, 27)
    dist_cap: float = 10.0
    fraction: float = 1.0
    epochs: int = 2
    balance: float = 0.5
    augment: bool = True
    threshold: float = 0.5
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    output_mode: str = "all"
    min_marker_separation: float = 3.0
    connectivity: int = 8
    train_test_split: float = 0.5

    def validate(self):
        if not self.scales:
            raise ConfigError("scales must list at least one scale")
        if any((not isinstance(s, int)) or s < 1 for s in self.scales):
            raise ConfigError("scales must be integers >= 1, got %r" % (self.scales,))
        if len(set(self.scales)) != len(self.scales):
            raise ConfigError("scales must be distinct, got %r" % (self.scales,))
        if not self.dist_cap > 0:
            raise ConfigError("dist_cap must be > 0, got %r" % (self.dist_cap,))
        if not 0 < self.fraction <= 1:
            raise ConfigError("fraction must be in (0,1], got %r" % (self.fraction,))
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1, got %r" % (self.epochs,))
        if not 0 <= self.balance <= 1:
            raise ConfigError("balance must be in [0,1], got %r" % (self.balance,))
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must be in (0,1), got %r" % (self.threshold,))
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1, got %r" % (self.batch_size,))
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0, got %r" % (self.learning_rate,))
        if self.seed < 0:
            raise ConfigError("seed must be >= 0, got %r" % (self.seed,))
        if self.output_mode not in OUTPUT_MODES:
            raise ConfigError(
                "output_mode must be one of %s, got %r" % ("/".join(OUTPUT_MODES), self.output_mode)
            )
        if not self.min_marker_separation > 0:
            raise ConfigError(
                "min_marker_separation must be > 0, got %r" % (self.min_marker_separation,)
            )
        if self.connectivity not in (4, 8):
            raise ConfigError("connectivity must be 4 or 8, got %r" % (self.connectivity,))
        if not 0 <= self.train_test_split <= 1:
            raise ConfigError(
                "train_test_split must be in [0,1], got %r" % (self.train_test_split,)
            )
        return self


# one parser per key; anything not listed here is an unknown key
def _parse_scales(text):
    try:
        vals = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError("scales must be comma-separated integers, got %r" % text)
    return vals


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError("expected true/false, got %r" % text)


def _parse_int(text):
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError("expected an integer, got %r" % text)


def _parse_float(text):
    try:
        val = float(text.strip())
    except ValueError:
        raise ConfigError("expected a number, got %r" % text)
    if math.isnan(val) or math.isinf(val):
        raise ConfigError("expected a finite number, got %r" % text)
    return val


_PARSERS = {
    "scales": _parse_scales,
    "dist_cap": _parse_float,
    "fraction": _parse_float,
    "epochs": _parse_int,
    "balance": _parse_float,
    "augment": _parse_bool,
    "threshold": _parse_float,
    "batch_size": _parse_int,
    "learning_rate": _parse_float,
    "seed": _parse_int,
    "output_mode": lambda t: t.strip(),
    "min_marker_separation": _parse_float,
    "connectivity": _parse_int,
    "train_test_split": _parse_float,
}

_KEY_HELP = {
    "scales": "window scales fed to the network, comma separated; each window is 25*scale px",
    "dist_cap": "distance-to-edge values are capped at this many pixels",
    "fraction": "fraction (0,1] of available training pixels actually used (F)",
    "epochs": "passes over the sampled training set (E)",
    "balance": "target share of inside-pixels among training samples; 0.5 = equal innies/outies",
    "augment": "apply random rotations/flips to training patches",
    "threshold": "probability cutoff for the binarized mask",
    "batch_size": "training minibatch size",
    "learning_rate": "optimizer step size",
    "seed": "random seed; same seed + single thread reproduces a run exactly",
    "output_mode": "which prediction files to write: labels, binary, distance, or all",
    "min_marker_separation": "minimum distance in px between watershed seed points",
    "connectivity": "pixel adjacency for components and watershed: 4 or 8",
    "train_test_split": "train share used when the synthetic generator fills the project",
}


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("%s:%d: expected key = value, got %r" % (source, lineno, raw.strip()))
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ConfigError("%s:%d: unknown key %r" % (source, lineno, key))
        if key in values:
            raise ConfigError("%s:%d: duplicate key %r" % (source, lineno, key))
        values[key] = _PARSERS[key](val)
    return ProjectConfig(**values).validate()


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config file not found: %s" % path)
    return parse_config_text(path.read_text(encoding="utf-8"), source=str(path))


def write_config(cfg, path):
    """Write a fully-commented config file with every key present."""
    lines = ["# project configuration: key = value, '#' starts a comment", ""]
    for f in fields(ProjectConfig):
        value = getattr(cfg, f.name)
        if f.name == "scales":
            shown = ",".join(str(s) for s in value)
        elif isinstance(value, bool):
            shown = "true" if value else "false"
        else:
            shown = str(value)
        lines.append("# " + _KEY_HELP[f.name])
        lines.append("%s = %s" % (f.name, shown))
        lines.append("")
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def write_default_config(path):
    write_config(ProjectConfig(), path)


def config_overrides(cfg, **overrides):
    """Copy cfg with the given non-None fields replaced, then revalidate."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    out = replace(cfg, **changes)
    return out.validate()


@dataclass
class ProjectLayout:
    root: Path

    def __post_init__(self):
        self.root = Path(self.root)

    @property
    def config_path(self):
        return self.root / CONFIG_NAME

    @property
    def train_images(self):
        return self.root / "train_images"

    @property
    def train_masks(self):
        return self.root / "train_masks"

    @property
    def areas_of_interest(self):
        return self.root / "areas_of_interest"

    @property
    def test_images(self):
        return self.root / "test_images"

    @property
    def models(self):
        return self.root / "models"

    @property
    def outputs(self):
        return self.root / "outputs"

    def is_initialized(self):
        return self.config_path.is_file()

    @classmethod
    def require(cls, root):
        layout = cls(Path(root))
        if not layout.is_initialized():
            raise ProjectError(
                "not an initialized project (no %s): %s" % (CONFIG_NAME, layout.root)
            )
        return layout


def init_project(path):
    """Create the folder tree and a default config.  Refuses to re-init."""
    layout = ProjectLayout(Path(path))
    if layout.is_initialized():
        raise ProjectExistsError("project exists: %s" % layout.root)
    try:
        layout.root.mkdir(parents=True, exist_ok=True)
        for sub in SUBDIRS:
            (layout.root / sub).mkdir(exist_ok=True)
        write_default_config(layout.config_path)
    except OSError as exc:
        raise ProjectError("project root not writable: %s (%s)" % (layout.root, exc)) from exc
    return layout


# ---------------------------------------------------------------------------
# raster I/O

_GRAY_MODES = ("L", "I", "I;16", "I;16B", "I;16L")


def _open_raster(path):
    path = Path(path)
    if path.suffix.lower() not in SUPPORTED_EXTS:
        raise ValueError("unsupported file type %r (want png/tif/tiff): %s" % (path.suffix, path))
    try:
        img = PILImage.open(path)
        img.load()
    except OSError as exc:
        raise ValueError("cannot read raster file %s: %s" % (path, exc)) from exc
    return img


def load_image(path):
    """Read an image as a float64 luminance grid.

    8/16-bit grayscale come through unscaled; RGB collapses to luminance
    0.2126 R + 0.7152 G + 0.0722 B.  Anything else is rejected.
    """
    img = _open_raster(path)
    if img.mode in _GRAY_MODES:
        return np.asarray(img, dtype=np.float64)
    if img.mode == "RGB":
        arr = np.asarray(img, dtype=np.float64)
        return arr[..., 0] * 0.2126 + arr[..., 1] * 0.7152 + arr[..., 2] * 0.0722
    raise ValueError(
        "unsupported image mode %r in %s (want 8/16-bit grayscale or RGB)" % (img.mode, path)
    )


def load_labels(path, connectivity=8):
    """Read a mask file as a label map.

    Grayscale only.  Files with a single positive value are treated as
    binary masks and connected-component labeled; files with several
    positive values are taken as already-labeled (0 = background).
    """
    img = _open_raster(path)
    if img.mode not in _GRAY_MODES:
        raise ValueError(
            "mask must be 8/16-bit grayscale, got mode %r in %s" % (img.mode, path)
        )
    arr = np.asarray(img)
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("mask must be integer-valued: %s" % path)
    arr = arr.astype(np.int32)
    positive = np.unique(arr[arr > 0])
    if positive.size <= 1:
        return label_components(arr > 0, connectivity)
    return arr


def load_aoi(path):
    """Read an area-of-interest mask; any nonzero pixel counts as inside."""
    img = _open_raster(path)
    if img.mode not in _GRAY_MODES:
        raise ValueError(
            "AOI must be 8/16-bit grayscale, got mode %r in %s" % (img.mode, path)
        )
    return np.asarray(img) > 0


def save_gray(path, arr):
    """Write a 2D uint8 or uint16 array as a grayscale PNG/TIFF."""
    arr = np.asarray(arr)
    if arr.dtype == np.uint8:
        img = PILImage.fromarray(arr, mode="L")
    elif arr.dtype == np.uint16:
        img = PILImage.fromarray(arr)  # mode I;16
    else:
        raise ValueError("expected uint8 or uint16, got %s" % arr.dtype)
    img.save(path)


def save_labels(path, labels):
    """Write a label map as 16-bit grayscale PNG (pixel value = label)."""
    labels = np.asarray(labels)
    if labels.size and labels.min() < 0:
        raise ValueError("labels must be nonnegative")
    if labels.size and labels.max() > 65535:
        raise ValueError("label values exceed 16-bit range")
    save_gray(path, labels.astype(np.uint16))


def find_by_stem(folder, stem):
    """Path of the file <folder>/<stem>.<ext> for any supported extension."""
    for ext in SUPPORTED_EXTS:
        cand = Path(folder) / (stem + ext)
        if cand.is_file():
            return cand
    return None


def list_images(folder):
    """Sorted (stem, path) pairs for the supported rasters in a folder."""
    folder = Path(folder)
    out = []
    seen = set()
    if not folder.is_dir():
        return out
    for p in sorted(folder.iterdir()):
        if p.suffix.lower() in SUPPORTED_EXTS and p.is_file():
            if p.stem in seen:
                log.warning("duplicate stem %r in %s, keeping the first", p.stem, folder)
                continue
            seen.add(p.stem)
            out.append((p.stem, p))
    return out


@dataclass
class TrainingPair:
    stem: str
    image: np.ndarray
    labels: np.ndarray
    aoi: np.ndarray = field(repr=False, default=None)


def load_training_pairs(layout, connectivity=8):
    """Load every usable (image, mask, aoi) triple from the train folders.

    Images without a same-stem mask are skipped with a warning.  Shape
    mismatches are hard errors.  The AOI defaults to all-true.
    """
    pairs = []
    for stem, img_path in list_images(layout.train_images):
        mask_path = find_by_stem(layout.train_masks, stem)
        if mask_path is None:
            log.warning("no mask for %r, excluded from training", stem)
            continue
        image = load_image(img_path)
        labels = load_labels(mask_path, connectivity)
        if labels.shape != image.shape:
            raise ValueError(
                "mask shape %s does not match image shape %s for %r"
                % (labels.shape, image.shape, stem)
            )
        aoi_path = find_by_stem(layout.areas_of_interest, stem)
        if aoi_path is not None:
            aoi = load_aoi(aoi_path)
            if aoi.shape != image.shape:
                raise ValueError(
                    "AOI shape %s does not match image shape %s for %r"
                    % (aoi.shape, image.shape, stem)
                )
        else:
            aoi = np.ones(image.shape, dtype=bool)
        pairs.append(TrainingPair(stem, image, labels, aoi))
    return pairs
