"""
Self-analogy: the end-to-end identity check
===========================================

Feeding the same image in as both content and style is the strongest
cheap sanity check the full pipeline has: the correspondence fields
should collapse onto the identity and the outputs should reproduce the
input pixel for pixel.  The `identical` schedule makes that the optimal
answer by pinning the latent maps to the content maps wherever the
feature response clears the detail threshold.

Positions whose response stays under the threshold carry no content
signal into matching (their latent stays at the random init), so a toy
network with weak responses can leave a few stray matches.  The numbers
printed below make that visible instead of hiding it.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from deepanalogy import net
from deepanalogy import pipeline as pl
from deepanalogy.fuse import AlphaSchedule
from deepanalogy.tensor import NNField

HERE = Path(__file__).resolve().parent
OUT = HERE / "out"
OUT.mkdir(exist_ok=True)

network = net.load_network_files(HERE.parent / "fixtures" / "toy.manifest",
                                 HERE.parent / "fixtures" / "toy.diaw")

rng = np.random.default_rng(5)
rr, cc = np.meshgrid(np.arange(64), np.arange(64), indexing="ij")
img = np.stack([40 + 170 * rr / 63,
                40 + 170 * cc / 63,
                128 + 90 * np.sin(2 * np.pi * rr / 16) * np.cos(2 * np.pi * cc / 16)],
               axis=2)
img = np.clip(img + rng.normal(0, 2, img.shape), 0, 255).astype(np.uint8)

cfg = pl.PipelineConfig.for_levels(
    3, alpha_schedule=AlphaSchedule.preset("identical"))
result = pl.run(img, img, network, cfg)

identity = NNField.identity(64, 64).coords
ident_rate = np.all(result.phi_ab.coords == identity, axis=2).mean()
err = np.abs(result.a_prime.astype(int) - img.astype(int)).max()

print(f"identity matches: {ident_rate * 100:.2f}% of positions")
print(f"max channel error: {err}/255")
for record in result.diagnostics:
    costs = record["match_costs_ab"]
    print(f"  level {record['level']}: match cost {costs[0]:.1f} -> {costs[-1]:.1f}")

Image.fromarray(img).save(OUT / "self_input.png")
Image.fromarray(result.a_prime).save(OUT / "self_a_prime.png")
print(f"wrote {OUT / 'self_input.png'} and {OUT / 'self_a_prime.png'}")
