"""
Minkowski geometry: four-vectors, boosts, and invariants
========================================================

Everything downstream rests on one fact: rotations and boosts preserve the
Minkowski inner product <x, y> = -x0*y0 + x1*y1 + x2*y2 + x3*y3.  This
script builds a few four-momenta, pushes them through random proper
transforms, and watches the invariants sit still while the components move.
"""
import numpy as np

from lieqgnn.minkowski import (
    boost_z,
    four_vector,
    is_lorentz,
    minkowski_inner,
    minkowski_sq_norm,
    psi,
    random_lorentz,
)

rng = np.random.default_rng(0)

# ----------------------------------------------------------------------
# 1. a massive particle and a massless one
p = four_vector(5.0, 1.0, 2.0, 3.0)       # E^2 > |p|^2: timelike, m^2 = 11
k = four_vector(3.0, 3.0, 0.0, 0.0)       # E = |p|: lightlike, m^2 = 0
print("m^2 of p:", -minkowski_sq_norm(p))  # sq norm is -m^2 in this signature
print("m^2 of k:", -minkowski_sq_norm(k))

# ----------------------------------------------------------------------
# 2. a z-boost changes components but not the invariant
lam = boost_z(0.8)
p_boosted = lam @ p
print("\nboosted p:", np.round(p_boosted, 4))
print("sq norm before/after:", minkowski_sq_norm(p), minkowski_sq_norm(p_boosted))

# ----------------------------------------------------------------------
# 3. random proper transforms: rotation . boost . rotation
for _ in range(3):
    lam = random_lorentz(rng, max_rapidity=1.0)
    assert is_lorentz(lam)
    drift = abs(minkowski_inner(lam @ p, lam @ k) - minkowski_inner(p, k))
    print("inner-product drift under random transform:", f"{drift:.2e}")

# ----------------------------------------------------------------------
# 4. psi compresses wide-ranging invariants onto a tame scale.
#    Pairwise quantities in a jet span several orders of magnitude;
#    sign(z) * log(1 + |z|) keeps the sign and squashes the range.
z = np.array([-1e4, -1.0, -1e-3, 0.0, 1e-3, 1.0, 1e4])
print("\nz      :", z)
print("psi(z) :", np.round(psi(z), 4))
