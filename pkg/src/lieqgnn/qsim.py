"""Exact statevector simulation of the 6-wire ansatz used by the model's
quantum sub-networks.

The circuit is: H on every wire, an RY angle-encoding layer, then `n_layers`
blocks of a fixed CNOT brick followed by one trainable RY per wire, with the
per-wire Pauli-Z expectation read out at the end (noiseless, infinite-shot
semantics, so outputs are exact expectations).

Amplitude ordering: qubit 0 is the most significant bit of the basis index,
i.e. bit(q, i) = (i >> (n - 1 - q)) & 1.  All kernels are O(2^n) per gate and
operate on a (batch, 2^n) array so many circuits with different angles run in
one vectorized pass.

Gradients come in two exact flavors:

* ``grad_ansatz``      - parameter-shift rule (two shifted evaluations per
                         angle); the reference implementation.
* ``ansatz_vjp``       - reverse sweep over the stored state trajectory;
                         one backward pass yields the same derivatives for
                         every angle at once.  Used on the training hot path
                         and tested to agree with parameter-shift.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_SQRT2_INV = 1.0 / np.sqrt(2.0)


def brick_layout(n_qubits: int) -> tuple[tuple[int, int], ...]:
    """Default entangler pattern: (0,1),(2,3),... then (1,2),(3,4),..."""
    even = [(q, q + 1) for q in range(0, n_qubits - 1, 2)]
    odd = [(q, q + 1) for q in range(1, n_qubits - 1, 2)]
    return tuple(even + odd)


@dataclass(frozen=True)
class AnsatzConfig:
    """Circuit shape: qubit count, layer count, and the CNOT layout applied
    identically in every layer."""

    n_qubits: int = 6
    n_layers: int = 2
    entangler_layout: tuple[tuple[int, int], ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not 1 <= self.n_qubits <= 20:
            raise ValueError("n_qubits must be in [1, 20]")
        if self.n_layers < 0:
            raise ValueError("n_layers must be >= 0")
        if self.entangler_layout is None:
            object.__setattr__(self, "entangler_layout", brick_layout(self.n_qubits))
        for c, t in self.entangler_layout:
            if c == t or not (0 <= c < self.n_qubits) or not (0 <= t < self.n_qubits):
                raise ValueError(f"bad CNOT pair ({c}, {t})")

    @property
    def n_params(self) -> int:
        return self.n_layers * self.n_qubits


class StateVector:
    """2^n complex amplitudes of an n-qubit register."""

    __slots__ = ("amps", "n")

    def __init__(self, amps: np.ndarray, n: int):
        amps = np.asarray(amps, dtype=np.complex128)
        if amps.shape != (1 << n,):
            raise ValueError(f"expected {1 << n} amplitudes for n={n}")
        self.amps = amps
        self.n = n

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, n)

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def z_expectations(self) -> np.ndarray:
        """<Z_q> for every qubit, each in [-1, 1]."""
        probs = np.abs(self.amps) ** 2
        return probs @ _z_table(self.n).T


# ---------------------------------------------------------------------------
# gate kernels on (batch, 2^n) amplitude arrays


def _check_qubit(q: int, n: int) -> None:
    if not 0 <= q < n:
        raise ValueError(f"qubit index {q} out of range for n={n}")


def _split(amps: np.ndarray, q: int, n: int) -> np.ndarray:
    """View with qubit q's bit exposed as its own axis of length 2."""
    b = amps.shape[0]
    return amps.reshape(b, 1 << q, 2, 1 << (n - 1 - q))


def _h_batch(amps: np.ndarray, q: int, n: int) -> np.ndarray:
    a = _split(amps, q, n)
    out = np.empty_like(a)
    out[:, :, 0, :] = (a[:, :, 0, :] + a[:, :, 1, :]) * _SQRT2_INV
    out[:, :, 1, :] = (a[:, :, 0, :] - a[:, :, 1, :]) * _SQRT2_INV
    return out.reshape(amps.shape)


def _ry_batch(amps: np.ndarray, q: int, n: int, theta: np.ndarray) -> np.ndarray:
    """RY(theta) per batch row; theta has shape (batch,)."""
    c = np.cos(0.5 * theta)[:, None, None]
    s = np.sin(0.5 * theta)[:, None, None]
    a = _split(amps, q, n)
    out = np.empty_like(a)
    out[:, :, 0, :] = c * a[:, :, 0, :] - s * a[:, :, 1, :]
    out[:, :, 1, :] = s * a[:, :, 0, :] + c * a[:, :, 1, :]
    return out.reshape(amps.shape)


def _ry_deriv_batch(amps: np.ndarray, q: int, n: int, theta: np.ndarray) -> np.ndarray:
    """Apply dRY/dtheta = 0.5 * [[-s, -c], [c, -s]] (not unitary)."""
    c = 0.5 * np.cos(0.5 * theta)[:, None, None]
    s = 0.5 * np.sin(0.5 * theta)[:, None, None]
    a = _split(amps, q, n)
    out = np.empty_like(a)
    out[:, :, 0, :] = -s * a[:, :, 0, :] - c * a[:, :, 1, :]
    out[:, :, 1, :] = c * a[:, :, 0, :] - s * a[:, :, 1, :]
    return out.reshape(amps.shape)


def _cnot_batch(amps: np.ndarray, ctrl: int, tgt: int, n: int) -> np.ndarray:
    if ctrl == tgt:
        raise ValueError("CNOT control and target must differ")
    _check_qubit(ctrl, n)
    _check_qubit(tgt, n)
    b = amps.shape[0]
    lo, hi = (ctrl, tgt) if ctrl < tgt else (tgt, ctrl)
    a = amps.reshape(b, 1 << lo, 2, 1 << (hi - lo - 1), 2, 1 << (n - 1 - hi))
    out = a.copy()
    if ctrl < tgt:
        out[:, :, 1, :, 0, :] = a[:, :, 1, :, 1, :]
        out[:, :, 1, :, 1, :] = a[:, :, 1, :, 0, :]
    else:
        out[:, :, 0, :, 1, :] = a[:, :, 1, :, 1, :]
        out[:, :, 1, :, 1, :] = a[:, :, 0, :, 1, :]
    return out.reshape(amps.shape)


_Z_TABLES: dict[int, np.ndarray] = {}


def _z_table(n: int) -> np.ndarray:
    """(n, 2^n) table of Z eigenvalues: +1 where qubit q's bit is 0."""
    if n not in _Z_TABLES:
        idx = np.arange(1 << n)
        bits = (idx[None, :] >> (n - 1 - np.arange(n)[:, None])) & 1
        _Z_TABLES[n] = 1.0 - 2.0 * bits.astype(np.float64)
    return _Z_TABLES[n]


# ---------------------------------------------------------------------------
# single-state functional API


def apply_h(state: StateVector, q: int) -> StateVector:
    """Hadamard on qubit q."""
    _check_qubit(q, state.n)
    return StateVector(_h_batch(state.amps[None, :], q, state.n)[0], state.n)


def apply_ry(state: StateVector, q: int, angle: float) -> StateVector:
    """RY(angle) = [[cos a/2, -sin a/2], [sin a/2, cos a/2]] on qubit q."""
    _check_qubit(q, state.n)
    if not np.isfinite(angle):
        raise ValueError("RY angle must be finite")
    theta = np.array([float(angle)])
    return StateVector(_ry_batch(state.amps[None, :], q, state.n, theta)[0], state.n)


def apply_cnot(state: StateVector, ctrl: int, tgt: int) -> StateVector:
    """CNOT: flip the target bit on basis states whose control bit is set."""
    return StateVector(_cnot_batch(state.amps[None, :], ctrl, tgt, state.n)[0], state.n)


# ---------------------------------------------------------------------------
# full-ansatz evaluation

# gate tags used in the shared sequence: ("h", q) | ("enc", q) | ("cnot", c, t)
# | ("theta", flat_index, q)


def gate_sequence(cfg: AnsatzConfig) -> list[tuple]:
    seq: list[tuple] = [("h", q) for q in range(cfg.n_qubits)]
    seq += [("enc", q) for q in range(cfg.n_qubits)]
    for layer in range(cfg.n_layers):
        seq += [("cnot", c, t) for (c, t) in cfg.entangler_layout]
        seq += [("theta", layer * cfg.n_qubits + q, q) for q in range(cfg.n_qubits)]
    return seq


def _check_lengths(cfg: AnsatzConfig, encodings: np.ndarray, thetas: np.ndarray) -> None:
    if encodings.shape[-1] != cfg.n_qubits:
        raise ValueError(f"expected {cfg.n_qubits} encoding angles, got {encodings.shape[-1]}")
    if thetas.shape[-1] != cfg.n_params:
        raise ValueError(f"expected {cfg.n_params} circuit angles, got {thetas.shape[-1]}")


def _forward_batch(cfg, encodings, thetas, keep_trajectory=False):
    """Run the ansatz on a (B, nq)/(B, n_params) batch of angle sets.

    Returns (final amps (B, 2^n), trajectory or None).  The trajectory holds
    the state *before* each gate, in gate order.
    """
    b = encodings.shape[0]
    n = cfg.n_qubits
    amps = np.zeros((b, 1 << n), dtype=np.complex128)
    amps[:, 0] = 1.0
    trajectory = [] if keep_trajectory else None
    for gate in gate_sequence(cfg):
        if keep_trajectory:
            trajectory.append(amps)
        if gate[0] == "h":
            amps = _h_batch(amps, gate[1], n)
        elif gate[0] == "enc":
            amps = _ry_batch(amps, gate[1], n, encodings[:, gate[1]])
        elif gate[0] == "cnot":
            amps = _cnot_batch(amps, gate[1], gate[2], n)
        else:  # ("theta", k, q)
            amps = _ry_batch(amps, gate[2], n, thetas[:, gate[1]])
    drift = np.max(np.abs(np.sum(np.abs(amps) ** 2, axis=1) - 1.0)) if b else 0.0
    if drift > 1e-12:
        raise RuntimeError(f"statevector norm drifted by {drift:.3e}")
    return amps, trajectory


def run_ansatz_batch(cfg: AnsatzConfig, encodings: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """<Z_q> for a batch of circuits; encodings (B, nq), thetas (B, n_params)."""
    encodings = np.atleast_2d(np.asarray(encodings, dtype=np.float64))
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
    _check_lengths(cfg, encodings, thetas)
    if thetas.shape[0] == 1 and encodings.shape[0] > 1:
        thetas = np.broadcast_to(thetas, (encodings.shape[0], thetas.shape[1]))
    amps, _ = _forward_batch(cfg, encodings, thetas)
    probs = np.abs(amps) ** 2
    return probs @ _z_table(cfg.n_qubits).T


def run_ansatz(cfg: AnsatzConfig, encoding: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Single-circuit convenience wrapper; returns the (n_qubits,) <Z> vector."""
    out = run_ansatz_batch(cfg, np.asarray(encoding)[None, :], np.asarray(params)[None, :])
    return out[0]


def grad_ansatz(cfg: AnsatzConfig, encoding: np.ndarray, params: np.ndarray):
    """Parameter-shift Jacobians of every <Z_q>.

    Returns (d<Z>/dtheta with shape (n_qubits, n_params),
             d<Z>/dencoding with shape (n_qubits, n_qubits)).
    Exact for RY generators: dE/dphi = [E(phi + pi/2) - E(phi - pi/2)] / 2.
    """
    encoding = np.asarray(encoding, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    _check_lengths(cfg, encoding[None, :], params[None, :])
    nq, npar = cfg.n_qubits, cfg.n_params
    n_shift = npar + nq
    thetas = np.tile(params, (2 * n_shift, 1))
    encs = np.tile(encoding, (2 * n_shift, 1))
    for k in range(npar):
        thetas[2 * k, k] += np.pi / 2
        thetas[2 * k + 1, k] -= np.pi / 2
    for q in range(nq):
        encs[2 * (npar + q), q] += np.pi / 2
        encs[2 * (npar + q) + 1, q] -= np.pi / 2
    exps = run_ansatz_batch(cfg, encs, thetas)  # (2*n_shift, nq)
    diff = 0.5 * (exps[0::2] - exps[1::2])  # (n_shift, nq)
    return diff[:npar].T.copy(), diff[npar:].T.copy()


def ansatz_vjp(cfg: AnsatzConfig, encodings: np.ndarray, thetas: np.ndarray,
               upstream: np.ndarray):
    """Reverse-sweep vector-Jacobian product for a batch of circuits.

    ``upstream`` (B, n_qubits) weights the <Z_q> outputs; returns gradients
    (d/dencodings (B, n_qubits), d/dthetas (B, n_params)).  Exact: agrees
    with grad_ansatz to float precision.
    """
    encodings = np.atleast_2d(np.asarray(encodings, dtype=np.float64))
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
    upstream = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    _check_lengths(cfg, encodings, thetas)
    if thetas.shape[0] == 1 and encodings.shape[0] > 1:
        thetas = np.broadcast_to(thetas, (encodings.shape[0], thetas.shape[1]))
    n = cfg.n_qubits
    amps, trajectory = _forward_batch(cfg, encodings, thetas, keep_trajectory=True)

    # lambda = O psi with O = sum_q upstream_q Z_q (diagonal)
    weights = upstream @ _z_table(n)  # (B, 2^n)
    lam = amps * weights
    g_enc = np.zeros_like(encodings)
    g_theta = np.zeros(thetas.shape, dtype=np.float64)
    seq = gate_sequence(cfg)
    for gate, before in zip(reversed(seq), reversed(trajectory)):
        kind = gate[0]
        if kind == "h":
            lam = _h_batch(lam, gate[1], n)
        elif kind == "cnot":
            lam = _cnot_batch(lam, gate[1], gate[2], n)
        else:
            if kind == "enc":
                q, angle = gate[1], encodings[:, gate[1]]
            else:
                q, angle = gate[2], thetas[:, gate[1]]
            dpsi = _ry_deriv_batch(before, q, n, angle)
            contrib = 2.0 * np.real(np.sum(np.conj(lam) * dpsi, axis=1))
            if kind == "enc":
                g_enc[:, gate[1]] += contrib
            else:
                g_theta[:, gate[1]] += contrib
            lam = _ry_batch(lam, q, n, -angle)  # RY(theta)^dagger = RY(-theta)
    return g_enc, g_theta


# ---------------------------------------------------------------------------
# dense brute-force oracle


def _gate_matrix_dense(gate: tuple, cfg: AnsatzConfig, encoding, params) -> np.ndarray:
    """Full 2^n x 2^n matrix for one gate, built from Kronecker products."""
    n = cfg.n_qubits
    eye = np.eye(2, dtype=np.complex128)
    h = np.array([[1, 1], [1, -1]], dtype=np.complex128) * _SQRT2_INV

    def ry(a):
        c, s = np.cos(a / 2), np.sin(a / 2)
        return np.array([[c, -s], [s, c]], dtype=np.complex128)

    def kron_chain(factors):
        out = np.array([[1.0 + 0.0j]])
        for f in factors:
            out = np.kron(out, f)
        return out

    kind = gate[0]
    if kind == "cnot":
        ctrl, tgt = gate[1], gate[2]
        p0 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
        p1 = np.array([[0, 0], [0, 1]], dtype=np.complex128)
        x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
        id_term = [eye] * n
        id_term[ctrl] = p0
        flip_term = [eye] * n
        flip_term[ctrl] = p1
        flip_term[tgt] = x
        return kron_chain(id_term) + kron_chain(flip_term)
    factors = [eye] * n
    if kind == "h":
        factors[gate[1]] = h
    elif kind == "enc":
        factors[gate[1]] = ry(encoding[gate[1]])
    else:
        factors[gate[2]] = ry(params[gate[1]])
    return kron_chain(factors)


def dense_unitary_oracle(cfg: AnsatzConfig, encoding: np.ndarray, params: np.ndarray):
    """Brute-force reference: multiply explicit 2^n x 2^n gate matrices.

    Returns (total unitary, <Z_q> vector).  Restricted to n <= 8 so the
    matrices stay small; exists purely to cross-check the stride kernels.
    """
    if cfg.n_qubits > 8:
        raise ValueError("dense oracle limited to n_qubits <= 8")
    encoding = np.asarray(encoding, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    _check_lengths(cfg, encoding[None, :], params[None, :])
    dim = 1 << cfg.n_qubits
    u = np.eye(dim, dtype=np.complex128)
    for gate in gate_sequence(cfg):
        u = _gate_matrix_dense(gate, cfg, encoding, params) @ u
    final = u[:, 0]  # circuit applied to |0...0>
    probs = np.abs(final) ** 2
    return u, probs @ _z_table(cfg.n_qubits).T
