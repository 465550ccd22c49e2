"""Per-pixel image segmentation: multi-scale CNN + watershed, no code required.

Train from a handful of labeled images, predict inside/outside probability
and distance-to-edge maps, split touching regions with a marker-based
watershed, and score against ground truth.  Everything is driven either
from the command line (see pixelseg.cli) or from these modules directly.
"""

__version__ = "0.1.0"

from .geometry import classify_pixels, distance_map, label_components
from .project import (
    ProjectConfig,
    ProjectLayout,
    init_project,
    load_aoi,
    load_config,
    load_image,
    load_labels,
    write_default_config,
)

__all__ = [
    "ProjectConfig",
    "ProjectLayout",
    "classify_pixels",
    "distance_map",
    "init_project",
    "label_components",
    "load_aoi",
    "load_config",
    "load_image",
    "load_labels",
    "write_default_config",
    "__version__",
]
