"""
Inside the training loop
========================

The trainer is three parts: a sample plan (which pixels, how balanced), a
batch assembler (stacks + targets), and a gradient loop.  This script runs
them separately so each knob is visible, then hand-steps the optimizer.

Two numbers organize everything.  F is the fraction of available pixels
sampled into the plan; E is how many passes the loop makes over it.  Total
gradient steps scale with E*F, and quality tracks that product far more
than either factor alone, which is why the report prints EF.
"""
import numpy as np

from pixelseg import network, project, sampler
from pixelseg.synth import SceneSpec, generate_scene

############################################################################
# One synthetic scene is plenty.  The AOI is everything.  Training code
# expects normalized intensities (mean 0, std 1 over the AOI).

spec = SceneSpec(height=72, width=72, n_min=5, n_max=7, r_min=5.0,
                 r_max=8.0, seed=21)
image, labels = generate_scene(spec)
aoi = np.ones(image.shape, bool)
image = sampler.normalize_image(image, aoi)
print("scene: %d regions, %d innie pixels" %
      (labels.max(), int((labels > 0).sum())))

############################################################################
# The plan draws innies and outies separately so class balance is a choice,
# not an accident of the image.  fraction=0.25 keeps a quarter of the
# available pixels; balance=0.5 aims for half innies.

plan = sampler.build_sample_plan([labels], [aoi], fraction=0.25,
                                 balance=0.5, seed=9)
print("plan: %d samples, %d innies / %d outies (M=%d available)" %
      (len(plan), plan.n_innie, plan.n_outie, plan.m_available))

############################################################################
# Batches pair each pixel's patch stack with two targets: the class bit
# and the capped distance-to-edge (zero for outies).

cfg = project.ProjectConfig(scales=(1, 3), epochs=1, batch_size=64, seed=9)
rng = np.random.default_rng(9)
stacks, class_t, dist_t = next(iter(
    sampler.assemble_batches(plan, [image], [labels], cfg.dist_cap,
                             cfg.batch_size, cfg.scales, rng)))
print("batch: stacks %s, %d innies, max distance target %.2f" %
      (stacks.shape, int(class_t.sum()), dist_t.max()))

############################################################################
# A few manual optimizer steps.  The loss has two terms: cross-entropy on
# the class bit, squared error on the (cap-scaled) distance.

arch = network.Architecture(n_scales=2)
params = network.init_params(arch, seed=9)
opt = network.Adam(params, learning_rate=1e-3)
for step in range(5):
    grads, stats = network.backward(params, stacks, class_t, dist_t,
                                    cfg.dist_cap)
    opt.step(params, grads)
    print("step %d: loss %.4f (class %.4f, dist %.4f)" %
          (step, stats["loss"], stats["class_loss"], stats["dist_loss"]))

############################################################################
# The real trainer does exactly this over every batch, E times, then
# checkpoints.  Its bookkeeping: T = E * plan size, EF = T / M.

t_steps = 2 * len(plan)
print("after E=2 epochs: T=%d, EF=%.2f" %
      (t_steps, t_steps / plan.m_available))
