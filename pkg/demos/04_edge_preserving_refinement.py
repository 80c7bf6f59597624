"""
Edge-preserving refinement for photo-like outputs
=================================================

Patch aggregation averages overlapping 5x5 patches, which softens fine
texture.  The refinement pass sharpens that back up by solving a
weighted least-squares system: each pixel is pulled toward its
neighbors except across strong gradients of the guide image, so flat
regions smooth out while edges stay put.

Two small experiments below: (1) the solve leaves an image untouched
when it is its own guide, and (2) with a clean guide it strips noise
from a degraded copy without blurring the step edge.
"""

import numpy as np

from deepanalogy.pipeline import wls_refine

rng = np.random.default_rng(3)

# A step edge with gentle ramps on both sides.
base = np.zeros((48, 48, 3))
base[:, :24] = 60.0
base[:, 24:] = 190.0
base += np.linspace(0, 20, 48)[:, None, None]
guide = np.clip(base, 0, 255).astype(np.uint8)

# 1. Guide == image: the weights cancel and nothing moves.
out = wls_refine(guide, guide)
print(f"self-guide deviation: {np.abs(out.astype(float) - guide).max():.2e}")

# 2. Noisy copy, clean guide: noise goes, the edge stays.
noisy = np.clip(guide + rng.normal(0, 12, guide.shape), 0, 255).astype(np.uint8)
cleaned = wls_refine(guide, noisy)

flat = np.s_[8:20, 4:20, 0]
edge_jump = lambda im: float(np.mean(im[:, 26:30, 0]) - np.mean(im[:, 18:22, 0]))
print(f"flat-region std:  noisy {noisy[flat].std():5.2f}  "
      f"cleaned {cleaned[flat].std():5.2f}")
print(f"edge step height: guide {edge_jump(guide):5.1f}  "
      f"noisy {edge_jump(noisy):5.1f}  cleaned {edge_jump(cleaned):5.1f}")
print("smoothing removes the noise while the step survives")
