"""
End to end on a synthetic scene
===============================

Generate a small labeled dataset, train the pixel classifier for a couple
of epochs, segment the held-out images, and score them.  Everything here
goes through the Python API; quickstart.sh does the same five steps through
the command line.

Runs in a minute or two on a laptop core.  Results are deterministic.
"""
import shutil
import tempfile
from pathlib import Path

import numpy as np

from pixelseg import cli, evaluate, project
from pixelseg.synth import SceneSpec, generate_dataset

root = Path(tempfile.mkdtemp()) / "demo_project"

############################################################################
# A project is a folder tree plus a text config.  `new` scaffolds it.

cli.main(["new", str(root)])
layout = project.ProjectLayout(root)
print("config lives at", layout.config_path.name)
print(layout.config_path.read_text().splitlines()[0])

############################################################################
# Synthesize four 96x96 scenes of fringe-patterned disks.  Half train,
# half test; ground-truth masks land next to the images.

spec = SceneSpec(height=96, width=96, n_min=6, n_max=9,
                 r_min=6.0, r_max=9.0, seed=3)
n_train, n_test = generate_dataset(spec, 4, 0.5, layout)
print("dataset:", n_train, "train /", n_test, "test")

############################################################################
# Train small and fast: two scales, three epochs, half the pixels.  The
# config file would normally carry these; flags override per run.

cli.main(["train", str(root), "--scales", "1,3", "--epochs", "3",
          "--fraction", "0.5", "--seed", "1"])

############################################################################
# Predict the test images and score them against the masks.

cli.main(["predict", str(root), "--scales", "1,3"])
cli.main(["eval", str(root), "--scales", "1,3"])
print((layout.outputs / "seg_report.txt").read_text())

############################################################################
# The same score, computed by hand from the files, to show there is no
# magic in the report.

truth = project.load_labels(project.find_by_stem(layout.train_masks, "synth_002"))
pred = project.load_labels(layout.outputs / "synth_002_labels.png")
print("hand-computed SEG for synth_002: %.4f" % evaluate.seg_score(truth, pred))

shutil.rmtree(root.parent, ignore_errors=True)
