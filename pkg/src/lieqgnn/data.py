"""Jet ingestion and synthesis.

Jets live on disk as JSONL, one jet per line:

    {"label": <0|1>, "particles": [[pt, eta, phi, pid], ...]}

with pt in GeV, eta dimensionless, phi in radians, pid a signed PDG id.
Loading reconstructs massless four-momenta (the public archives store
kinematics only; under E = pt*cosh(eta) every constituent is exactly null,
and its PDG mass still enters through the scalar features) and a width-7
scalar vector per particle.  A self-contained synthetic generator produces
two separable classes for desk-scale runs without any external data.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .minkowski import psi
from .model import JetGraph, N_SCALARS

TWO_PI = 2.0 * math.pi

# PDG masses in GeV for the ids that appear in the public jet archives.
PDG_MASSES = {
    22: 0.0,
    211: 0.13957039,
    321: 0.493677,
    2212: 0.93827208816,
    130: 0.497611,
    2112: 0.93956542052,
    11: 0.00051099895,
    13: 0.1056583755,
}

# Charge sign of the positive-id state (PDG convention: 11 is the electron,
# so its positive id carries charge -1; antiparticles flip the sign).
_CHARGE = {22: 0, 211: 1, 321: 1, 2212: 1, 130: 0, 2112: 0, 11: -1, 13: -1}

# Identity one-hot categories: photon / charged hadron / neutral hadron /
# charged lepton (electrons and muons share the lepton slot so the vector
# stays width 7; they remain distinguishable through the mass feature).
_CATEGORY = {22: 0, 211: 1, 321: 1, 2212: 1, 130: 2, 2112: 2, 11: 3, 13: 3}


def wrap_phi(phi: float) -> float:
    """Reduce an angle to the canonical azimuth range (-pi, pi]."""
    w = math.remainder(phi, TWO_PI)
    return w + TWO_PI if w <= -math.pi else w


@dataclass(frozen=True)
class ParticleRecord:
    """One jet constituent in collider coordinates."""

    pt: float
    eta: float
    phi: float
    pid: int

    def __post_init__(self):
        if not (math.isfinite(self.pt) and self.pt > 0):
            raise ValueError(f"pt must be positive and finite, got {self.pt}")
        if not math.isfinite(self.eta):
            raise ValueError(f"eta must be finite, got {self.eta}")
        if not (math.isfinite(self.phi) and -math.pi < self.phi <= math.pi):
            raise ValueError(f"phi must lie in (-pi, pi], got {self.phi}")
        if not isinstance(self.pid, (int, np.integer)) or isinstance(self.pid, bool):
            raise ValueError(f"pid must be an integer, got {self.pid!r}")


@dataclass(frozen=True)
class JetEntry:
    """A labeled jet: 0 for quark-initiated, 1 for gluon-initiated."""

    label: int
    particles: tuple[ParticleRecord, ...]

    def __post_init__(self):
        if self.label not in (0, 1) or isinstance(self.label, bool):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        object.__setattr__(self, "particles", tuple(self.particles))
        if len(self.particles) < 1:
            raise ValueError("a jet needs at least one particle")

    @property
    def n_particles(self) -> int:
        return len(self.particles)


@dataclass(frozen=True)
class SplitSpec:
    """Shuffled train/val/test sizes; defaults match the standard protocol."""

    n_train: int = 10000
    n_val: int = 1250
    n_test: int = 1250
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1 or self.n_val < 0 or self.n_test < 0:
            raise ValueError("split sizes must be positive (train) / non-negative")

    @property
    def total(self) -> int:
        return self.n_train + self.n_val + self.n_test


class DataFormatError(ValueError):
    """A jet file violated the JSONL contract; message carries path:line."""


# ---------------------------------------------------------------------------
# kinematics and features


def reconstruct_four_momentum(p: ParticleRecord) -> np.ndarray:
    """(E, px, py, pz) from (pt, eta, phi), massless: E = pt*cosh(eta).

    cosh^2 - sinh^2 = 1 makes the result exactly null up to round-off.
    """
    return np.array([
        p.pt * math.cosh(p.eta),
        p.pt * math.cos(p.phi),
        p.pt * math.sin(p.phi),
        p.pt * math.sinh(p.eta),
    ])


def pid_features(pid: int, include_mass: bool = True) -> np.ndarray:
    """Width-7 scalar vector: [charge, four identity one-hots, psi(mass), unknown].

    Identity slots are photon / charged hadron / neutral hadron / charged
    lepton.  An id outside the known table sets only the unknown flag (zero
    charge, zero mass).  ``include_mass=False`` zeroes the mass slot for
    runs that should not see PDG masses at all.
    """
    out = np.zeros(N_SCALARS)
    base = abs(int(pid))
    if base in _CATEGORY:
        sign = 1 if pid >= 0 else -1
        out[0] = sign * _CHARGE[base]
        out[1 + _CATEGORY[base]] = 1.0
        if include_mass:
            out[5] = psi(PDG_MASSES[base])
    else:
        out[6] = 1.0
    return out


def truncate_particles(particles, max_particles: int):
    """Keep the max_particles highest-pt constituents, preserving input order.

    Ties break deterministically toward earlier input positions.
    """
    particles = tuple(particles)
    if len(particles) <= max_particles:
        return particles
    pts = np.array([p.pt for p in particles])
    keep = np.sort(np.argsort(-pts, kind="stable")[:max_particles])
    return tuple(particles[i] for i in keep)


def jet_to_graph(jet: JetEntry, max_particles: int | None = None,
                 include_mass: bool = True) -> JetGraph:
    """Complete-digraph view of a jet: four-momenta plus scalar features."""
    parts = jet.particles if max_particles is None else truncate_particles(
        jet.particles, max_particles)
    x = np.stack([reconstruct_four_momentum(p) for p in parts])
    scalars = np.stack([pid_features(p.pid, include_mass) for p in parts])
    return JetGraph(x, scalars, jet.label)


# ---------------------------------------------------------------------------
# JSONL I/O


def _parse_particle(entry, where: str) -> ParticleRecord:
    if not isinstance(entry, (list, tuple)) or len(entry) != 4:
        raise DataFormatError(f"{where}: each particle must be [pt, eta, phi, pid]")
    pt, eta, phi, pid = entry
    for v, name in ((pt, "pt"), (eta, "eta"), (phi, "phi")):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise DataFormatError(f"{where}: {name} must be a finite number, got {v!r}")
    if isinstance(pid, bool) or not isinstance(pid, int):
        raise DataFormatError(f"{where}: pid must be an integer, got {pid!r}")
    try:
        return ParticleRecord(float(pt), float(eta), wrap_phi(float(phi)), pid)
    except ValueError as exc:
        raise DataFormatError(f"{where}: {exc}") from exc


def load_jets(path, min_particles: int = 10,
              max_particles: int | None = None) -> list[JetEntry]:
    """Parse a JSONL jet file; filter short jets, truncate long ones by pt.

    Jets keep file order.  Azimuths are wrapped into (-pi, pi] on load.
    Malformed input raises DataFormatError naming the offending line.
    """
    jets: list[JetEntry] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            where = f"{path}:{lineno}"
            line = line.strip()
            if not line:
                raise DataFormatError(f"{where}: blank line")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{where}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise DataFormatError(f"{where}: expected a JSON object")
            for field in ("label", "particles"):
                if field not in obj:
                    raise DataFormatError(f"{where}: missing field {field!r}")
            label = obj["label"]
            if isinstance(label, bool) or label not in (0, 1):
                raise DataFormatError(f"{where}: label must be 0 or 1, got {label!r}")
            raw = obj["particles"]
            if not isinstance(raw, list):
                raise DataFormatError(f"{where}: particles must be a list")
            particles = tuple(
                _parse_particle(entry, f"{where}, particle {k}") for k, entry in enumerate(raw)
            )
            if len(particles) < min_particles:
                continue
            if max_particles is not None:
                particles = truncate_particles(particles, max_particles)
            jets.append(JetEntry(label, particles))
    return jets


def write_jets(path, jets) -> None:
    """Emit canonical JSONL (compact separators, LF endings, UTF-8)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for jet in jets:
            rec = {
                "label": jet.label,
                "particles": [[p.pt, p.eta, p.phi, p.pid] for p in jet.particles],
            }
            fh.write(json.dumps(rec, separators=(",", ":")))
            fh.write("\n")


def split_dataset(jets, spec: SplitSpec):
    """Seeded shuffle, then contiguous (train, val, test) slices."""
    jets = list(jets)
    if spec.total > len(jets):
        raise ValueError(f"need {spec.total} jets for this split, have {len(jets)}")
    perm = np.random.default_rng(spec.seed).permutation(len(jets))
    shuffled = [jets[i] for i in perm]
    train = shuffled[:spec.n_train]
    val = shuffled[spec.n_train:spec.n_train + spec.n_val]
    test = shuffled[spec.n_train + spec.n_val:spec.total]
    return train, val, test


# ---------------------------------------------------------------------------
# synthetic generator


_PID_CHOICES = np.array([22, 211, -211, 321, -321, 2212, -2212, 130, 2112, -2112,
                         11, -11, 13, -13])
_PID_WEIGHTS = np.array([0.25, 0.27, 0.27, 0.04, 0.04, 0.02, 0.02, 0.03, 0.02, 0.01,
                         0.01, 0.01, 0.005, 0.005])
_PID_WEIGHTS = _PID_WEIGHTS / _PID_WEIGHTS.sum()


def _one_jet(rng: np.random.Generator, label: int) -> JetEntry:
    if label == 0:
        n = int(rng.integers(10, 17))  # narrow, hard-fragmenting class
        spread, pt_scale, pt_shape = 0.1, 5.0, 3.5
    else:
        n = int(rng.integers(14, 21))  # wide, soft-fragmenting class
        spread, pt_scale, pt_shape = 0.25, 2.0, 4.5
    eta0 = rng.uniform(-1.0, 1.0)
    phi0 = rng.uniform(-math.pi, math.pi)
    pts = 0.5 + pt_scale * rng.pareto(pt_shape, size=n)
    etas = eta0 + spread * rng.normal(size=n)
    phis = phi0 + spread * rng.normal(size=n)
    pids = rng.choice(_PID_CHOICES, size=n, p=_PID_WEIGHTS)
    particles = tuple(
        ParticleRecord(float(pt), float(eta), wrap_phi(float(ph)), int(pid))
        for pt, eta, ph, pid in zip(pts, etas, phis, pids)
    )
    return JetEntry(label, particles)


def synthetic_jets(n_per_class: int, seed: int = 0) -> list[JetEntry]:
    """Two separable jet classes, labels interleaved 0,1,0,1,...

    Class 0: 10-16 particles, angular spread 0.1, steeply falling pt.
    Class 1: 14-20 particles, spread 0.25, softer pt.  Both classes draw
    particle ids from the same mix, so identity features carry no label
    information.  Deterministic given the seed.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be at least 1")
    rng = np.random.default_rng(seed)
    jets = []
    for _ in range(n_per_class):
        jets.append(_one_jet(rng, 0))
        jets.append(_one_jet(rng, 1))
    return jets
