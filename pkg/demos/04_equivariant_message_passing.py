"""
Symmetry of the jet classifier, demonstrated
============================================

The network's message inputs are Minkowski invariants of the particle
four-momenta, its coordinate updates are linear combinations of the
four-momenta themselves, and its pooling is a mean over nodes.  Three
properties follow, and this script measures each directly:

  * logits are invariant under proper Lorentz transforms of the jet,
  * per-block coordinate outputs are equivariant (transform-then-update
    equals update-then-transform),
  * logits are invariant under particle reordering.

The same construction in plain Euclidean space (difference vectors
weighted by message coefficients) gives rotation and translation
equivariance, shown last as a sanity check on the idea itself.
"""
import numpy as np

from lieqgnn import autodiff as ad
from lieqgnn.data import jet_to_graph, synthetic_jets
from lieqgnn.minkowski import random_lorentz
from lieqgnn.model import (
    Model,
    ModelConfig,
    VARIANTS,
    edge_index,
    euclidean_equivariant_update,
    leqb_forward,
)

rng = np.random.default_rng(3)
graphs = [jet_to_graph(j, max_particles=10) for j in synthetic_jets(5, seed=3)]

# ----------------------------------------------------------------------
# 1. logit invariance, every variant
print("logit deviation under 20 random transforms (rapidity <= 1):")
for variant in sorted(VARIANTS):
    model = Model(ModelConfig(variant=variant), seed=4)
    worst = 0.0
    for g in graphs:
        base = model.logits(g)
        for _ in range(20):
            lam = random_lorentz(rng, max_rapidity=1.0)
            worst = max(worst, float(np.max(np.abs(model.logits(g.transformed(lam)) - base))))
    print(f"  {variant:13s} max {worst:.2e}")

# ----------------------------------------------------------------------
# 2. coordinate equivariance of one block
model = Model(ModelConfig(variant="classical"), seed=4)
g = graphs[0]
ei, ej = edge_index(g.n_particles)
h = ad.Tensor(rng.normal(size=(g.n_particles, model.config.n_h)))
lam = random_lorentz(rng)
x_then_lam, _ = leqb_forward(ad.Tensor(g.x), h, model.blocks[0], model.config.c, ei, ej)
lam_then_x, _ = leqb_forward(ad.Tensor(g.x @ lam.T), h, model.blocks[0],
                             model.config.c, ei, ej)
dev = np.max(np.abs(lam_then_x.data - x_then_lam.data @ lam.T))
print("\nblock coordinate equivariance:", f"{dev:.2e}")

# ----------------------------------------------------------------------
# 3. permutation invariance
perm = rng.permutation(g.n_particles)
dev = np.max(np.abs(model.logits(g.permuted(perm)) - model.logits(g)))
print("permutation invariance:", f"{dev:.2e}")

# ----------------------------------------------------------------------
# 4. the same trick in flat 2-D space
points = rng.normal(size=(6, 2))
messages = rng.normal(size=(6, 6, 3))
v = rng.normal(size=3)
phi = lambda m: np.tanh(m @ v)
ang = rng.uniform(0, 2 * np.pi)
rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
shift = rng.normal(size=2)

out = euclidean_equivariant_update(points, messages, phi, c=0.1)
out_rot = euclidean_equivariant_update(points @ rot.T, messages, phi, c=0.1)
out_shift = euclidean_equivariant_update(points + shift, messages, phi, c=0.1)
print("\nEuclidean rotation equivariance:   ",
      f"{np.max(np.abs(out_rot - out @ rot.T)):.2e}")
print("Euclidean translation equivariance:",
      f"{np.max(np.abs(out_shift - (out + shift))):.2e}")
