"""
Inverting a sub-network by gradient descent
===========================================

Warping a coarse feature map leaves a hole one level down: nothing says
what the finer map should look like there.  The pipeline fills it by
optimization, searching for a finer-level input whose forward pass
reproduces the warped coarse map.  This script runs that inversion in
isolation on the checked-in toy network and watches the loss fall.

Pooling makes the inversion many-to-one, so the recovered input is one
of many preimages rather than the original; what the objective promises
is agreement after the forward pass, and that is what to measure.
"""

from pathlib import Path

import numpy as np

from deepanalogy import net
from deepanalogy.deconv import DeconvSettings, deconvolve

HERE = Path(__file__).resolve().parent
network = net.load_network_files(HERE.parent / "fixtures" / "toy.manifest",
                                 HERE.parent / "fixtures" / "toy.diaw")

# A smooth test card: two ramps and a sinusoid, one per channel.
rr, cc = np.meshgrid(np.arange(32), np.arange(32), indexing="ij")
img = np.stack([40 + 170 * rr / 31,
                40 + 170 * cc / 31,
                128 + 90 * np.sin(rr / 3.0) * np.cos(cc / 3.0)], axis=2)
img = img.astype(np.uint8)

feats = net.forward(network, img)
fine, coarse = feats[0], feats[1]
print(f"fine map {fine.shape}, coarse map {coarse.shape}")

# Invert the lvl1 -> lvl2 stage: find a fine-level input that maps to
# the coarse target.  The optimizer starts from seeded Gaussian noise.
recovered, losses = deconvolve(network, "lvl1", "lvl2", coarse,
                               DeconvSettings(max_iterations=400,
                                              rel_tolerance=1e-8, seed=0))

print(f"loss: initial {losses[0]:.3e}, final {losses[-1]:.3e} "
      f"({losses[-1] / losses[0]:.2e} of start, {len(losses) - 1} accepted steps)")

reproduced = net.forward_subnet(network, "lvl1", "lvl2", recovered)
target_err = np.linalg.norm(reproduced - coarse) / np.linalg.norm(coarse)
preimage_err = np.linalg.norm(recovered - fine) / np.linalg.norm(fine)
print(f"forward of the recovered input vs target: relative norm {target_err:.3f}")
print(f"recovered input vs the original fine map: relative norm {preimage_err:.2f}"
      f"  (large is expected; the inverse is not unique)")
# The residual that survives belongs to relu units that start dark and
# so never receive a gradient; it shrinks with a luckier init, not with
# more iterations.
