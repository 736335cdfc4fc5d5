"""Minkowski geometry: inner products, the psi compression map, and sampled
proper Lorentz transforms.

Four-vectors are plain numpy arrays in (e, px, py, pz) ordering; every
function broadcasts over a leading batch axis, so a jet is just an (n, 4)
array.  The metric convention is eta = diag(-1, 1, 1, 1).
"""
from __future__ import annotations

import numpy as np

# diag(-1, 1, 1, 1), kept as a vector so inner products are elementwise
METRIC = np.array([-1.0, 1.0, 1.0, 1.0])

MAX_RAPIDITY = 10.0


def four_vector(e: float, px: float, py: float, pz: float) -> np.ndarray:
    """Build a validated (4,) four-vector array."""
    x = np.array([e, px, py, pz], dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("four-vector components must be finite")
    return x


def minkowski_inner(x: np.ndarray, y: np.ndarray) -> float | np.ndarray:
    """<x, y> = x^T eta y = -e_x e_y + px_x px_y + py_x py_y + pz_x pz_y.

    Accepts (4,) vectors or (..., 4) batches; returns a scalar or (...) array.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    out = np.sum(x * METRIC * y, axis=-1)
    return float(out) if out.ndim == 0 else out


def minkowski_sq_norm(x: np.ndarray) -> float | np.ndarray:
    """Squared Minkowski norm ||x||^2 = <x, x>."""
    return minkowski_inner(x, x)


def psi(z):
    """Signed logarithmic compression psi(z) = sgn(z) * ln(1 + |z|).

    Odd, monotone increasing, and tames the dynamic range of inner products
    built from collider-scale momenta.
    """
    z = np.asarray(z, dtype=np.float64)
    out = np.sign(z) * np.log1p(np.abs(z))
    return float(out) if out.ndim == 0 else out


def boost_z(rapidity: float) -> np.ndarray:
    """Boost along z with the given rapidity, as a 4x4 matrix.

    Rejects |rapidity| > 10 (cosh overflows usefulness long before float64
    does, and nothing physical here needs gamma > 11000).
    """
    w = float(rapidity)
    if abs(w) > MAX_RAPIDITY:
        raise ValueError(f"|rapidity| must be <= {MAX_RAPIDITY}, got {w}")
    m = np.eye(4)
    ch, sh = np.cosh(w), np.sinh(w)
    m[0, 0] = ch
    m[0, 3] = sh
    m[3, 0] = sh
    m[3, 3] = ch
    return m


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random SO(3) rotation embedded as a 4x4 spatial block."""
    # QR of a Gaussian matrix gives a Haar-distributed orthogonal matrix once
    # the R diagonal signs are absorbed; flip a column if det = -1.
    a = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    m = np.eye(4)
    m[1:, 1:] = q
    return m


def random_lorentz(seed, max_rapidity: float = 2.0) -> np.ndarray:
    """Sample a proper orthochronous transform R2 . B_z(w) . R1.

    R1, R2 are uniform spatial rotations and w is uniform in
    [-max_rapidity, max_rapidity].  Deterministic for a given seed (an int or
    an already-constructed Generator).
    """
    if not 0.0 < max_rapidity <= 5.0:
        raise ValueError("max_rapidity must lie in (0, 5]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    r1 = _random_rotation(rng)
    r2 = _random_rotation(rng)
    w = rng.uniform(-max_rapidity, max_rapidity)
    return r2 @ boost_z(w) @ r1


def apply_transform(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply a 4x4 transform to a (4,) vector or an (..., 4) batch."""
    x = np.asarray(x, dtype=np.float64)
    return x @ np.asarray(m, dtype=np.float64).T


def is_lorentz(m: np.ndarray, tol: float = 1e-10) -> bool:
    """True iff m^T eta m = eta elementwise within tol."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (4, 4):
        return False
    eta = np.diag(METRIC)
    return bool(np.max(np.abs(m.T @ eta @ m - eta)) <= tol)
