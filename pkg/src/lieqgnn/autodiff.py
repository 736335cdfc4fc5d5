"""Reverse-mode differentiation for the classical half of the model.

Deliberately small: double-precision numpy buffers, a handful of primitives
(affine maps, activations, gathers/scatters for graph aggregation, the
psi compression, a weighted row inner product), and one boundary node that
splices quantum-circuit derivatives from :mod:`lieqgnn.qsim` into the
backward pass.  No general broadcasting engine - every model shape is fixed
by its config, so each primitive states exactly the shapes it accepts.

Graphs are built forward; every Tensor gets a monotonically increasing
sequence number, so creation order is already a topological order and the
backward walk is deterministic.
"""
from __future__ import annotations

import itertools

import numpy as np

from . import qsim

_SEQ = itertools.count()


class Tensor:
    """A numpy buffer plus the bookkeeping needed to differentiate it."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_vjp", "_seq")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._vjp = None
        self._seq = next(_SEQ)

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):  # pragma: no cover
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data, parents, vjp) -> Tensor:
    """Build an op output; constant subgraphs are pruned from the tape."""
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _need(t: Tensor) -> bool:
    return t.requires_grad


# ---------------------------------------------------------------------------
# primitives


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"add shape mismatch: {a.shape} vs {b.shape}")
    return _result(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"sub shape mismatch: {a.shape} vs {b.shape}")
    return _result(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of same-shape tensors."""
    if a.shape != b.shape:
        raise ValueError(f"mul shape mismatch: {a.shape} vs {b.shape}")
    return _result(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def scale(a: Tensor, s: float) -> Tensor:
    """Multiply by a Python scalar constant."""
    s = float(s)
    return _result(a.data * s, (a,), lambda g: (g * s,))


def colmul(mat: Tensor, col: Tensor) -> Tensor:
    """Scale each row of (B, d) ``mat`` by the matching entry of (B, 1) ``col``."""
    if mat.ndim != 2 or col.shape != (mat.shape[0], 1):
        raise ValueError(f"colmul expects (B,d) and (B,1), got {mat.shape} and {col.shape}")
    return _result(
        mat.data * col.data,
        (mat, col),
        lambda g: (g * col.data, np.sum(g * mat.data, axis=1, keepdims=True)),
    )


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Affine map w @ x + b for a (d_in,) vector or a (B, d_in) batch."""
    if w.ndim != 2 or b.shape != (w.shape[0],):
        raise ValueError(f"bad affine params: w {w.shape}, b {b.shape}")
    if x.shape[-1] != w.shape[1] or x.ndim not in (1, 2):
        raise ValueError(f"linear shape mismatch: x {x.shape}, w {w.shape}")
    data = x.data @ w.data.T + b.data

    if x.ndim == 1:
        def vjp(g):
            return g @ w.data, np.outer(g, x.data), g
    else:
        def vjp(g):
            return g @ w.data, g.T @ x.data, g.sum(axis=0)

    return _result(data, (x, w, b), vjp)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0  # derivative at exactly 0 is defined as 0
    return _result(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def sigmoid(x: Tensor) -> Tensor:
    out = 1.0 / (1.0 + np.exp(-x.data))
    return _result(out, (x,), lambda g: (g * out * (1.0 - out),))


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)
    return _result(out, (x,), lambda g: (g * (1.0 - out * out),))


def psi(x: Tensor) -> Tensor:
    """Signed log compression sgn(z) ln(1 + |z|), derivative 1 / (1 + |z|)."""
    out = np.sign(x.data) * np.log1p(np.abs(x.data))
    return _result(out, (x,), lambda g: (g / (1.0 + np.abs(x.data)),))


def concat(tensors: list[Tensor]) -> Tensor:
    """Concatenate along the last axis."""
    widths = [t.shape[-1] for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=-1)
    splits = np.cumsum(widths)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=-1))

    return _result(data, tuple(tensors), vjp)


def gather_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows of a (n, d) tensor; backward scatter-adds."""
    idx = np.asarray(idx, dtype=np.intp)
    n = x.shape[0]

    def vjp(g):
        out = np.zeros_like(x.data)
        np.add.at(out, idx, g)
        return (out,)

    return _result(x.data[idx], (x,), vjp)


def segment_sum(x: Tensor, idx: np.ndarray, n: int) -> Tensor:
    """Sum rows of (B, d) ``x`` into ``n`` buckets given by ``idx``."""
    idx = np.asarray(idx, dtype=np.intp)
    data = np.zeros((n,) + x.shape[1:])
    np.add.at(data, idx, x.data)
    return _result(data, (x,), lambda g: (g[idx],))


def mean_rows(x: Tensor) -> Tensor:
    """Mean over axis 0 of a (B, d) tensor."""
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError(f"mean_rows expects a non-empty (B, d) tensor, got {x.shape}")
    b = x.shape[0]
    return _result(x.data.mean(axis=0), (x,), lambda g: (np.tile(g / b, (b, 1)),))


def sum_all(x: Tensor) -> Tensor:
    return _result(np.sum(x.data), (x,), lambda g: (np.full(x.shape, g),))


def softmax_cross_entropy(logits: Tensor, label: int) -> Tensor:
    """-log softmax(logits)[label], max-subtraction stabilized."""
    k = logits.shape[-1]
    if logits.ndim != 1:
        raise ValueError("softmax_cross_entropy expects a 1-D logit vector")
    if not isinstance(label, (int, np.integer)) or not 0 <= label < k:
        raise ValueError(f"label must be an int in [0, {k}), got {label!r}")
    z = logits.data - np.max(logits.data)
    log_norm = np.log(np.sum(np.exp(z)))
    loss = log_norm - z[label]
    probs = np.exp(z - log_norm)

    def vjp(g):
        grad = probs.copy()
        grad[label] -= 1.0
        return (grad * g,)

    return _result(loss, (logits,), vjp)


def weighted_inner_rows(a: Tensor, b: Tensor, weights: np.ndarray) -> Tensor:
    """Row-wise weighted inner product: out[i] = sum_k w_k a[i,k] b[i,k].

    Shapes (B, d) x (B, d) -> (B, 1); the weight vector is a constant (the
    model passes the Minkowski metric diagonal here).
    """
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"weighted_inner_rows shape mismatch: {a.shape} vs {b.shape}")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (a.shape[1],):
        raise ValueError("weights must match the row width")
    data = np.sum(a.data * w * b.data, axis=1, keepdims=True)
    return _result(data, (a, b), lambda g: (g * (w * b.data), g * (w * a.data)))


def quantum_node(encoding: Tensor, theta: Tensor, cfg: qsim.AnsatzConfig,
                 method: str = "shift") -> Tensor:
    """Hybrid boundary: forward runs the ansatz, backward splices in the
    circuit Jacobians.

    ``encoding`` is (n_qubits,) or (B, n_qubits); ``theta`` is (n_params,)
    and is shared across the batch.  ``method`` picks the derivative route:
    "shift" contracts the upstream gradient with the parameter-shift
    Jacobians from grad_ansatz; "backprop" uses the reverse-sweep VJP.
    Both are exact and agree to float precision.
    """
    if method not in ("shift", "backprop"):
        raise ValueError(f"unknown quantum gradient method {method!r}")
    if theta.shape != (cfg.n_params,):
        raise ValueError(f"theta must have shape ({cfg.n_params},), got {theta.shape}")
    if encoding.shape[-1] != cfg.n_qubits or encoding.ndim not in (1, 2):
        raise ValueError(f"bad encoding shape {encoding.shape}")
    single = encoding.ndim == 1
    enc2 = encoding.data[None, :] if single else encoding.data
    out = qsim.run_ansatz_batch(cfg, enc2, theta.data[None, :])

    def vjp(g):
        g2 = g[None, :] if single else g
        if method == "backprop":
            g_enc, g_theta = qsim.ansatz_vjp(cfg, enc2, theta.data[None, :], g2)
            g_theta = g_theta.sum(axis=0)
        else:
            g_enc = np.empty_like(enc2)
            g_theta = np.zeros(cfg.n_params)
            for i in range(enc2.shape[0]):
                j_theta, j_enc = qsim.grad_ansatz(cfg, enc2[i], theta.data)
                g_enc[i] = g2[i] @ j_enc
                g_theta += g2[i] @ j_theta
        return (g_enc[0] if single else g_enc, g_theta)

    return _result(out[0] if single else out, (encoding, theta), vjp)


# ---------------------------------------------------------------------------
# backward pass


class Tape:
    """Topologically ordered slice of the graph reachable from one root.

    Creation order is a topological order (parents always exist before
    children), so the record is just the reachable differentiable nodes
    sorted by sequence number; backprop visits each exactly once.
    """

    def __init__(self, root: Tensor):
        self.root = root
        seen: set[int] = set()
        nodes: list[Tensor] = []
        stack = [root]
        while stack:
            t = stack.pop()
            if id(t) in seen or not t.requires_grad:
                continue
            seen.add(id(t))
            nodes.append(t)
            stack.extend(t._parents)
        nodes.sort(key=lambda t: t._seq, reverse=True)
        self.nodes = nodes

    def backprop(self, seed: float = 1.0, write: bool = True) -> dict[Tensor, np.ndarray]:
        """Run the reverse sweep; with write=False the leaf map is returned
        without touching any .grad (lets concurrent sweeps share leaves)."""
        grads: dict[int, np.ndarray] = {id(self.root): np.asarray(float(seed))}
        leaf_grads: dict[Tensor, np.ndarray] = {}
        for node in self.nodes:
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._vjp is None:
                leaf_grads[node] = g
                continue
            for parent, pg in zip(node._parents, node._vjp(g)):
                if not parent.requires_grad or pg is None:
                    continue
                acc = grads.get(id(parent))
                grads[id(parent)] = pg if acc is None else acc + pg
        if write:
            for t, g in leaf_grads.items():
                t.grad = g if t.grad is None else t.grad + g
        return leaf_grads


def backward(loss: Tensor, seed: float = 1.0) -> dict[Tensor, np.ndarray]:
    """Populate and return gradients of every reachable requires_grad leaf.

    ``loss`` must be a scalar.  Gradients accumulate into ``.grad`` (summed
    over calls until zero_grad); the returned map holds this call's values.
    """
    if loss.shape != ():
        raise ValueError(f"backward needs a scalar root, got shape {loss.shape}")
    if not loss.requires_grad:
        return {}
    return Tape(loss).backprop(seed)
