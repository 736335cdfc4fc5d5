"""Hybrid quantum/classical graph network over particle four-momenta.

Jets are complete digraphs whose nodes carry a four-momentum ``x_i`` and a
scalar feature vector.  Stacked equivariant blocks update both: coordinates
move only along linear combinations of other four-momenta with
Lorentz-invariant coefficients, and the scalar channel sees geometry only
through the two Minkowski invariants psi(|x_i - x_j|^2) and
psi(<x_i, x_j>).  Every per-edge network (phi_e, phi_x, phi_h, phi_m) can be
either a small classical MLP or a hybrid wrapper around the 6-qubit circuit
from :mod:`lieqgnn.qsim`; logits are therefore exactly Lorentz invariant up
to float round-off for every variant.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from . import autodiff as ad
from . import qsim
from .minkowski import METRIC

# Width of the per-particle scalar feature vector produced by the data
# pipeline (charge, identity one-hots, compressed mass, unknown flag).
N_SCALARS = 7

PHI_SLOTS = ("phi_e", "phi_x", "phi_h", "phi_m")

# Each named variant maps to the set of phi slots realized as quantum MLPs.
VARIANTS: dict[str, frozenset[str]] = {
    "classical": frozenset(),
    "phi_e": frozenset({"phi_e"}),
    "phi_x": frozenset({"phi_x"}),
    "phi_h": frozenset({"phi_h"}),
    "phi_m": frozenset({"phi_m"}),
    "full_quantum": frozenset(PHI_SLOTS),
}

# Trainable-parameter totals reported for the original six models.  Their
# hidden widths were never published, so these are documentation targets for
# comparison with count_parameters(), not enforced values.
REFERENCE_PARAM_TOTALS = {
    "phi_e": 668,
    "phi_h": 1100,
    "phi_m": 1090,
    "phi_x": 998,
    "full_quantum": 592,
    "classical": 1088,
}


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters; defaults keep a jet forward pass cheap."""

    variant: str = "classical"
    n_blocks: int = 2
    n_h: int = 8
    d_hid: int = 8
    c: float = 1e-3
    max_particles: int = 16
    n_qubits: int = 6
    circuit_layers: int = 2
    quantum_grad: str = "backprop"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(
                f"unknown variant {self.variant!r}; valid: {', '.join(sorted(VARIANTS))}"
            )
        for name in ("n_blocks", "n_h", "d_hid", "max_particles", "n_qubits", "circuit_layers"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not self.c > 0:
            raise ValueError("aggregation constant c must be positive")
        if self.quantum_grad not in ("shift", "backprop"):
            raise ValueError(f"quantum_grad must be 'shift' or 'backprop', got {self.quantum_grad!r}")

    @property
    def ansatz(self) -> qsim.AnsatzConfig:
        return qsim.AnsatzConfig(n_qubits=self.n_qubits, n_layers=self.circuit_layers)

    @property
    def quantum_slots(self) -> frozenset[str]:
        return VARIANTS[self.variant]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def phi_dims(n_h: int) -> dict[str, tuple[int, int]]:
    """(d_in, d_out) for each phi slot at scalar width n_h."""
    return {
        "phi_e": (2 * n_h + 2, n_h),
        "phi_x": (n_h, 1),
        "phi_h": (2 * n_h, n_h),
        "phi_m": (n_h, 1),
    }


@dataclass
class JetGraph:
    """One jet: four-momenta (n, 4), scalar features (n, N_SCALARS), label."""

    x: np.ndarray
    scalars: np.ndarray
    label: int

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.scalars = np.asarray(self.scalars, dtype=np.float64)
        if self.x.ndim != 2 or self.x.shape[1] != 4:
            raise ValueError(f"x must be (n, 4), got {self.x.shape}")
        n = self.x.shape[0]
        if n < 2:
            raise ValueError("a jet graph needs at least 2 particles")
        if self.scalars.shape != (n, N_SCALARS):
            raise ValueError(f"scalars must be ({n}, {N_SCALARS}), got {self.scalars.shape}")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.scalars))):
            raise ValueError("jet features must be finite")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        self.label = int(self.label)

    @property
    def n_particles(self) -> int:
        return self.x.shape[0]

    def transformed(self, m: np.ndarray) -> "JetGraph":
        """Apply a Lorentz transform to the four-momenta; scalars untouched."""
        return JetGraph(self.x @ np.asarray(m, dtype=np.float64).T, self.scalars, self.label)

    def permuted(self, perm: np.ndarray) -> "JetGraph":
        perm = np.asarray(perm)
        return JetGraph(self.x[perm], self.scalars[perm], self.label)


# ---------------------------------------------------------------------------
# per-edge networks


class ClassicalMLP:
    """Two affine layers with a ReLU between, d_in -> d_hid -> d_out."""

    def __init__(self, d_in: int, d_out: int, d_hid: int, rng: np.random.Generator):
        self.d_in, self.d_out, self.d_hid = d_in, d_out, d_hid
        self.params = OrderedDict(
            W1=ad.Tensor(rng.normal(size=(d_hid, d_in)) / np.sqrt(d_in), requires_grad=True),
            b1=ad.Tensor(np.zeros(d_hid), requires_grad=True),
            W2=ad.Tensor(rng.normal(size=(d_out, d_hid)) / np.sqrt(d_hid), requires_grad=True),
            b2=ad.Tensor(np.zeros(d_out), requires_grad=True),
        )

    def __call__(self, x: ad.Tensor) -> ad.Tensor:
        p = self.params
        return ad.linear(ad.relu(ad.linear(x, p["W1"], p["b1"])), p["W2"], p["b2"])

    @staticmethod
    def count(d_in: int, d_out: int, d_hid: int) -> int:
        return (d_in + 1) * d_hid + (d_hid + 1) * d_out


class QuantumMLP:
    """Affine in-projection -> 6-qubit ansatz -> affine out-projection.

    The projections exist because the circuit has a fixed number of wires
    while phi inputs/outputs vary per slot; the circuit itself contributes
    exactly ansatz.n_params trainable angles.
    """

    def __init__(self, d_in: int, d_out: int, ansatz: qsim.AnsatzConfig,
                 rng: np.random.Generator, grad_method: str = "backprop"):
        nq = ansatz.n_qubits
        self.d_in, self.d_out = d_in, d_out
        self.ansatz = ansatz
        self.grad_method = grad_method
        self.params = OrderedDict(
            Win=ad.Tensor(rng.normal(size=(nq, d_in)) / np.sqrt(d_in), requires_grad=True),
            bin=ad.Tensor(np.zeros(nq), requires_grad=True),
            theta=ad.Tensor(rng.uniform(-np.pi / 4, np.pi / 4, size=ansatz.n_params),
                            requires_grad=True),
            Wout=ad.Tensor(rng.normal(size=(d_out, nq)) / np.sqrt(nq), requires_grad=True),
            bout=ad.Tensor(np.zeros(d_out), requires_grad=True),
        )

    def __call__(self, x: ad.Tensor) -> ad.Tensor:
        p = self.params
        enc = ad.linear(x, p["Win"], p["bin"])
        z = ad.quantum_node(enc, p["theta"], self.ansatz, self.grad_method)
        return ad.linear(z, p["Wout"], p["bout"])

    @staticmethod
    def count(d_in: int, d_out: int, ansatz: qsim.AnsatzConfig) -> int:
        nq = ansatz.n_qubits
        return (d_in + 1) * nq + ansatz.n_params + (nq + 1) * d_out


def make_phi(slot: str, config: ModelConfig, rng: np.random.Generator):
    d_in, d_out = phi_dims(config.n_h)[slot]
    if slot in config.quantum_slots:
        return QuantumMLP(d_in, d_out, config.ansatz, rng, config.quantum_grad)
    return ClassicalMLP(d_in, d_out, config.d_hid, rng)


def _block_slots(config: ModelConfig, k: int) -> tuple[str, ...]:
    """Slots present in block k; the last block drops the coordinate net."""
    if k == config.n_blocks - 1:
        return tuple(s for s in PHI_SLOTS if s != "phi_x")
    return PHI_SLOTS


# ---------------------------------------------------------------------------
# block operations


@lru_cache(maxsize=64)
def edge_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All ordered pairs i != j of a complete digraph on n nodes."""
    src = np.repeat(np.arange(n), n - 1)
    dst = np.concatenate([np.delete(np.arange(n), i) for i in range(n)])
    src.setflags(write=False)
    dst.setflags(write=False)
    return src, dst


def embed_scalars(raw: ad.Tensor, w: ad.Tensor, b: ad.Tensor) -> ad.Tensor:
    """Single affine layer mapping raw scalar features to h^0."""
    return ad.linear(raw, w, b)


def compute_message(h: ad.Tensor, x: ad.Tensor, ei: np.ndarray, ej: np.ndarray,
                    phi_e) -> ad.Tensor:
    """m_ij = phi_e(h_i, h_j, psi(|x_i - x_j|^2), psi(<x_i, x_j>)) per edge."""
    xi, xj = ad.gather_rows(x, ei), ad.gather_rows(x, ej)
    diff = ad.sub(xi, xj)
    sq = ad.psi(ad.weighted_inner_rows(diff, diff, METRIC))
    ip = ad.psi(ad.weighted_inner_rows(xi, xj, METRIC))
    feats = ad.concat([ad.gather_rows(h, ei), ad.gather_rows(h, ej), sq, ip])
    return phi_e(feats)


def coordinate_update(x: ad.Tensor, msgs: ad.Tensor, ei: np.ndarray, ej: np.ndarray,
                      phi_x, c: float) -> ad.Tensor:
    """x_i += c * sum_{j != i} phi_x(m_ij) * x_j.

    The coefficients are Lorentz scalars, so the update is a linear
    combination of four-momenta and commutes with any Lorentz transform.
    """
    coef = phi_x(msgs)
    moved = ad.colmul(ad.gather_rows(x, ej), coef)
    return ad.add(x, ad.scale(ad.segment_sum(moved, ei, x.shape[0]), c))


def edge_gates(msgs: ad.Tensor, phi_m) -> ad.Tensor:
    """w_ij = sigmoid(phi_m(m_ij)), one gate in (0, 1) per edge."""
    return ad.sigmoid(phi_m(msgs))


def scalar_update(h: ad.Tensor, msgs: ad.Tensor, gates: ad.Tensor,
                  ei: np.ndarray, ej: np.ndarray, phi_h, c: float) -> ad.Tensor:
    """h_i += phi_h(h_i, c * sum_{j != i} w_ij * h_j)."""
    agg = ad.scale(ad.segment_sum(ad.colmul(ad.gather_rows(h, ej), gates), ei, h.shape[0]), c)
    return ad.add(h, phi_h(ad.concat([h, agg])))


def leqb_forward(x: ad.Tensor, h: ad.Tensor, block: dict, c: float,
                 ei: np.ndarray, ej: np.ndarray) -> tuple[ad.Tensor, ad.Tensor]:
    """One equivariant block: messages, coordinate update, gated scalar update.

    The final block of a model omits the "phi_x" entry: its coordinate
    output would feed nothing (only the scalar channel reaches the decoder),
    so the update is skipped there to leave no dead parameters.
    """
    msgs = compute_message(h, x, ei, ej, block["phi_e"])
    if "phi_x" in block:
        x_next = coordinate_update(x, msgs, ei, ej, block["phi_x"], c)
    else:
        x_next = x
    gates = edge_gates(msgs, block["phi_m"])
    h_next = scalar_update(h, msgs, gates, ei, ej, block["phi_h"], c)
    return x_next, h_next


def decode(h: ad.Tensor, w: ad.Tensor, b: ad.Tensor) -> ad.Tensor:
    """Mean-pool node scalars, then affine n_h -> 2 logits."""
    return ad.linear(ad.mean_rows(h), w, b)


# ---------------------------------------------------------------------------
# the model


class Model:
    """Config + named parameter tensors + the forward pass wiring them up."""

    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        self.seed = int(seed)
        rng = np.random.default_rng(self.seed)
        n_h = config.n_h

        self.embed_W = ad.Tensor(rng.normal(size=(n_h, N_SCALARS)) / np.sqrt(N_SCALARS),
                                 requires_grad=True)
        self.embed_b = ad.Tensor(np.zeros(n_h), requires_grad=True)
        self.blocks = [
            {slot: make_phi(slot, config, rng) for slot in _block_slots(config, k)}
            for k in range(config.n_blocks)
        ]
        self.decode_W = ad.Tensor(rng.normal(size=(2, n_h)) / np.sqrt(n_h), requires_grad=True)
        self.decode_b = ad.Tensor(np.zeros(2), requires_grad=True)

        self._params: OrderedDict[str, ad.Tensor] = OrderedDict()
        self._params["embed.W"] = self.embed_W
        self._params["embed.b"] = self.embed_b
        for k, block in enumerate(self.blocks):
            for slot, net in block.items():
                for name, tensor in net.params.items():
                    self._params[f"block{k}.{slot}.{name}"] = tensor
        self._params["decode.W"] = self.decode_W
        self._params["decode.b"] = self.decode_b

        self._spec: OrderedDict[str, tuple[int, tuple[int, ...]]] = OrderedDict()
        offset = 0
        for name, t in self._params.items():
            self._spec[name] = (offset, t.shape)
            offset += t.data.size
        self._n_params = offset

    # -- parameter plumbing -------------------------------------------------

    def parameters(self) -> OrderedDict:
        return self._params

    @property
    def n_parameters(self) -> int:
        return self._n_params

    def param_spec(self) -> OrderedDict:
        """name -> (flat offset, shape), in flat-vector order."""
        return OrderedDict(self._spec)

    def get_flat(self) -> np.ndarray:
        return np.concatenate([t.data.ravel() for t in self._params.values()])

    def set_flat(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self._n_params,):
            raise ValueError(f"expected flat vector of length {self._n_params}, got {vec.shape}")
        for name, t in self._params.items():
            offset, shape = self._spec[name]
            t.data = vec[offset:offset + t.data.size].reshape(shape).copy()

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.zero_grad()

    def grad_flat(self) -> np.ndarray:
        """Flattened accumulated gradients; untouched tensors contribute zeros."""
        parts = []
        for t in self._params.values():
            parts.append(np.zeros(t.data.size) if t.grad is None else t.grad.ravel())
        return np.concatenate(parts)

    # -- forward ------------------------------------------------------------

    def forward(self, graph: JetGraph) -> ad.Tensor:
        ei, ej = edge_index(graph.n_particles)
        x = ad.Tensor(graph.x)
        h = embed_scalars(ad.Tensor(graph.scalars), self.embed_W, self.embed_b)
        for block in self.blocks:
            x, h = leqb_forward(x, h, block, self.config.c, ei, ej)
        return decode(h, self.decode_W, self.decode_b)

    def logits(self, graph: JetGraph) -> np.ndarray:
        return self.forward(graph).data

    def loss(self, graph: JetGraph) -> tuple[ad.Tensor, np.ndarray]:
        out = self.forward(graph)
        return ad.softmax_cross_entropy(out, graph.label), out.data


def model_forward(jet: JetGraph, model: Model) -> ad.Tensor:
    """Full pass: embed -> n_blocks x leqb_forward -> decode."""
    return model.forward(jet)


def count_parameters(config: ModelConfig) -> OrderedDict:
    """Exact trainable-scalar counts by component, plus the total.

    Matches the tensors a Model actually allocates; quantum slots contribute
    exactly ansatz.n_params circuit angles each (12 at the defaults).  The
    last block has no phi_x entry (see leqb_forward).
    """
    counts: OrderedDict[str, int] = OrderedDict()
    counts["embed"] = (N_SCALARS + 1) * config.n_h
    dims = phi_dims(config.n_h)
    for k in range(config.n_blocks):
        for slot in _block_slots(config, k):
            d_in, d_out = dims[slot]
            if slot in config.quantum_slots:
                counts[f"block{k}.{slot}"] = QuantumMLP.count(d_in, d_out, config.ansatz)
            else:
                counts[f"block{k}.{slot}"] = ClassicalMLP.count(d_in, d_out, config.d_hid)
    counts["decode"] = (config.n_h + 1) * 2
    counts["total"] = sum(counts.values())
    return counts


# ---------------------------------------------------------------------------
# Euclidean demonstration op (plain numpy, no tape)


def euclidean_equivariant_update(points: np.ndarray, messages: np.ndarray,
                                 phi_x, c: float = 1.0) -> np.ndarray:
    """x_i' = x_i + c * sum_{j != i} (x_i - x_j) * phi_x(m_ij).

    Rotation- and translation-equivariant by construction: coefficients come
    from messages alone and difference vectors transform covariantly.
    ``points`` is (n, d) with d >= 2, ``messages`` is (n, n, k), and phi_x
    maps the message axis to one scalar weight per ordered pair.
    """
    points = np.asarray(points, dtype=np.float64)
    messages = np.asarray(messages, dtype=np.float64)
    n, d = points.shape
    if d < 2:
        raise ValueError("points must have at least 2 coordinates")
    if messages.shape[:2] != (n, n):
        raise ValueError(f"messages must be (n, n, k), got {messages.shape}")
    w = np.asarray(phi_x(messages), dtype=np.float64)
    if w.shape != (n, n):
        raise ValueError(f"phi_x must produce one weight per pair, got {w.shape}")
    w = w.copy()
    np.fill_diagonal(w, 0.0)
    row_tot = w.sum(axis=1, keepdims=True)
    return points + c * (row_tot * points - w @ points)
