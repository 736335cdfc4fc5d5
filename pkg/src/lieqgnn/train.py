"""Training loop: AdamW with decoupled decay, warm-up + cosine annealing,
cross-entropy over two logits, metrics CSV, and self-describing checkpoints.

Determinism contract: a (seed, config) pair fixes every shuffle (epoch
shuffles draw from rng([seed, epoch]), so resuming at epoch k replays the
exact shuffle an uninterrupted run would use), gradients are reduced in
batch order regardless of worker count, and checkpoints round-trip
parameters and optimizer moments bit-exactly.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import autodiff as ad
from .model import Model, ModelConfig

THREADS_ENV_VAR = "LIE_EQGNN_THREADS"

METRICS_HEADER = "epoch,train_loss,val_loss,train_acc,val_acc,lr,seconds"

_CHECKPOINT_MAGIC = b"LEQG"
_CHECKPOINT_VERSION = 1


class TrainingAborted(RuntimeError):
    """Raised when a non-finite loss or gradient stops the run."""


class CheckpointError(ValueError):
    """Unreadable, wrong-version, truncated, or corrupted checkpoint."""


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamWState:
    """Moment buffers plus hyperparameters for decoupled-decay Adam.

    ``decay_mask`` holds 1.0 where weight decay applies; by default biases
    and circuit angles are exempt (decaying a rotation angle has no
    norm-shrinking meaning).
    """

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-2
    decay_mask: np.ndarray | None = None

    @classmethod
    def zeros(cls, n_params: int, **kwargs) -> "AdamWState":
        return cls(m=np.zeros(n_params), v=np.zeros(n_params), **kwargs)


def build_decay_mask(model: Model, decay_all: bool = False) -> np.ndarray:
    """1.0 on weight matrices, 0.0 on biases and circuit angles.

    ``decay_all=True`` is the documented switch that decays everything.
    """
    mask = np.ones(model.n_parameters)
    if decay_all:
        return mask
    for name, (offset, shape) in model.param_spec().items():
        leaf = name.rsplit(".", 1)[-1]
        if not leaf.startswith("W"):
            size = int(np.prod(shape)) if shape else 1
            mask[offset:offset + size] = 0.0
    return mask


def adamw_step(params: np.ndarray, grads: np.ndarray, state: AdamWState,
               lr: float) -> tuple[np.ndarray, AdamWState]:
    """One decoupled-weight-decay Adam update; moments update in place.

    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * theta
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, "
            f"moments {state.m.shape}")
    if not np.all(np.isfinite(grads)):
        bad = int(np.flatnonzero(~np.isfinite(grads))[0])
        raise TrainingAborted(f"non-finite gradient at flat index {bad}")
    state.t += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * grads
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    decay = params if state.decay_mask is None else state.decay_mask * params
    new = params - lr * (m_hat / (np.sqrt(v_hat) + state.eps)) - lr * state.weight_decay * decay
    return new, state


# ---------------------------------------------------------------------------
# learning-rate schedule


@dataclass(frozen=True)
class LrSchedule:
    """Linear warm-up from start_factor*base_lr, then cosine to min_lr."""

    warmup_epochs: int = 5
    total_epochs: int = 50
    base_lr: float = 1e-3
    start_factor: float = 0.1
    min_lr: float = 1e-6

    def __post_init__(self):
        if not 0 < self.warmup_epochs < self.total_epochs:
            raise ValueError("need 0 < warmup_epochs < total_epochs")
        if not 0 < self.min_lr <= self.base_lr:
            raise ValueError("need 0 < min_lr <= base_lr")


def lr_at(epoch: int, schedule: LrSchedule) -> float:
    """Learning rate for a zero-based epoch index.

    Hits base_lr exactly at epoch == warmup_epochs (cos(0) = 1) and is
    non-increasing afterwards.
    """
    if not 0 <= epoch < schedule.total_epochs:
        raise ValueError(f"epoch {epoch} outside [0, {schedule.total_epochs})")
    if epoch < schedule.warmup_epochs:
        frac = epoch / schedule.warmup_epochs
        return schedule.base_lr * (schedule.start_factor + (1.0 - schedule.start_factor) * frac)
    progress = (epoch - schedule.warmup_epochs) / (schedule.total_epochs - schedule.warmup_epochs)
    return schedule.min_lr + 0.5 * (schedule.base_lr - schedule.min_lr) * (
        1.0 + math.cos(math.pi * progress))


# ---------------------------------------------------------------------------
# run configuration and metrics


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    warmup_epochs: int = 5
    base_lr: float = 1e-3
    start_factor: float = 0.1
    min_lr: float = 1e-6
    weight_decay: float = 1e-2
    decay_all: bool = False

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")

    @property
    def schedule(self) -> LrSchedule:
        # short runs live entirely inside the warm-up ramp
        total = max(self.epochs, 2)
        warm = min(self.warmup_epochs, total - 1)
        return LrSchedule(warmup_epochs=max(warm, 1), total_epochs=total,
                          base_lr=self.base_lr, start_factor=self.start_factor,
                          min_lr=self.min_lr)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    val_loss: float
    train_acc: float
    val_acc: float
    lr: float
    seconds: float

    def __post_init__(self):
        if not (0.0 <= self.train_acc <= 1.0 and 0.0 <= self.val_acc <= 1.0):
            raise ValueError("accuracies must lie in [0, 1]")
        if self.train_loss < 0 or self.val_loss < 0 or self.seconds < 0:
            raise ValueError("losses and seconds must be non-negative")


def resolve_threads(requested: int | None = None) -> int:
    """Worker count: requested (or cpu count), capped by LIE_EQGNN_THREADS."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV_VAR)
    if cap is not None:
        n = min(n, int(cap))
    return max(1, n)


def _jet_pass(model: Model, graph, scale: float):
    """Forward + reverse for one jet; returns (loss, correct, leaf grad map)."""
    loss, logits = model.loss(graph)
    leaf = ad.Tape(loss).backprop(seed=scale, write=False)
    return loss.item(), int(np.argmax(logits)) == graph.label, leaf


# ---------------------------------------------------------------------------
# epoch driver


def train_epoch(model: Model, dataset: list, state: AdamWState, lr: float,
                epoch: int, batch_size: int = 32, seed: int = 0,
                threads: int | None = None) -> tuple[float, float]:
    """One pass over the training set; returns (mean loss, accuracy).

    The shuffle derives from rng([seed, epoch]); jets inside a batch may be
    evaluated by several workers, but their gradients are merged in batch
    order, so the result is independent of the worker count.
    """
    if not dataset:
        raise ValueError("empty training set")
    order = np.random.default_rng([seed, epoch]).permutation(len(dataset))
    n_threads = resolve_threads(threads)
    pool = ThreadPoolExecutor(max_workers=n_threads) if n_threads > 1 else None
    loss_total = 0.0
    n_correct = 0
    try:
        for lo in range(0, len(order), batch_size):
            batch_idx = order[lo:lo + batch_size]
            graphs = [dataset[i] for i in batch_idx]
            scale = 1.0 / len(graphs)
            if pool is None:
                results = [_jet_pass(model, g, scale) for g in graphs]
            else:
                results = list(pool.map(lambda g: _jet_pass(model, g, scale), graphs))
            model.zero_grad()
            for pos, (loss_val, correct, leaf) in enumerate(results):
                if not math.isfinite(loss_val):
                    raise TrainingAborted(
                        f"non-finite loss at jet index {int(batch_idx[pos])} "
                        f"(epoch {epoch})")
                loss_total += loss_val
                n_correct += correct
                for tensor, g in leaf.items():
                    tensor.grad = g if tensor.grad is None else tensor.grad + g
            new_params, _ = adamw_step(model.get_flat(), model.grad_flat(), state, lr)
            model.set_flat(new_params)
    finally:
        if pool is not None:
            pool.shutdown()
    return loss_total / len(order), n_correct / len(order)


def evaluate(model, dataset: list, threads: int | None = None) -> tuple[float, float]:
    """Mean loss and argmax accuracy; mutates nothing."""
    if not dataset:
        raise ValueError("empty evaluation set")
    n_threads = resolve_threads(threads)

    def one(graph):
        loss, logits = model.loss(graph)
        return loss.item(), int(np.argmax(logits)) == graph.label

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(one, dataset))
    else:
        results = [one(g) for g in dataset]
    losses = [r[0] for r in results]
    return float(np.mean(losses)), sum(r[1] for r in results) / len(results)


def fit(model: Model, train_set: list, val_set: list, config: TrainConfig,
        state: AdamWState | None = None, start_epoch: int = 0,
        end_epoch: int | None = None, threads: int | None = None,
        on_epoch=None) -> tuple[list[EpochMetrics], AdamWState]:
    """Run epochs [start_epoch, end_epoch or config.epochs) under the
    config's full-length schedule; returns the new metrics rows.

    ``end_epoch`` pauses a run early (checkpoint and continue later);
    the learning-rate schedule still spans config.epochs.
    """
    if end_epoch is None:
        end_epoch = config.epochs
    if not 0 <= start_epoch <= end_epoch <= config.epochs:
        raise ValueError(f"need 0 <= start {start_epoch} <= end {end_epoch} "
                         f"<= total {config.epochs}")
    if state is None:
        state = AdamWState.zeros(model.n_parameters,
                                 weight_decay=config.weight_decay,
                                 decay_mask=build_decay_mask(model, config.decay_all))
    schedule = config.schedule
    rows: list[EpochMetrics] = []
    for epoch in range(start_epoch, end_epoch):
        t0 = time.perf_counter()
        lr = lr_at(epoch, schedule)
        train_loss, train_acc = train_epoch(
            model, train_set, state, lr, epoch,
            batch_size=config.batch_size, seed=config.seed, threads=threads)
        val_loss, val_acc = evaluate(model, val_set, threads=threads)
        row = EpochMetrics(epoch, train_loss, val_loss, train_acc, val_acc, lr,
                           time.perf_counter() - t0)
        rows.append(row)
        if on_epoch is not None:
            on_epoch(row)
    return rows, state


# ---------------------------------------------------------------------------
# metrics CSV


def write_metrics(path, rows: list[EpochMetrics]) -> None:
    """CSV with LF endings; floats printed in shortest round-trip form."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(METRICS_HEADER + "\n")
        for r in rows:
            fh.write(f"{r.epoch},{r.train_loss!r},{r.val_loss!r},"
                     f"{r.train_acc!r},{r.val_acc!r},{r.lr!r},{r.seconds!r}\n")


def read_metrics(path) -> list[EpochMetrics]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != METRICS_HEADER:
            raise ValueError(f"bad metrics header: {header!r}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            parts = line.strip().split(",")
            if len(parts) != 7:
                raise ValueError(f"{path}:{lineno}: expected 7 fields")
            rows.append(EpochMetrics(int(parts[0]), *map(float, parts[1:])))
    return rows


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, model: Model, state: AdamWState, train_config: TrainConfig,
                    epoch_next: int) -> None:
    """Self-describing binary: magic, version, JSON header, params + moments
    as little-endian doubles, sha256 trailer over everything before it."""
    header = {
        "format_version": _CHECKPOINT_VERSION,
        "model_config": model.config.to_dict(),
        "model_seed": model.seed,
        "train_config": train_config.to_dict(),
        "epoch_next": int(epoch_next),
        "adam": {
            "t": state.t,
            "beta1": state.beta1,
            "beta2": state.beta2,
            "eps": state.eps,
            "weight_decay": state.weight_decay,
        },
        "n_params": model.n_parameters,
        "params": [[name, off, list(shape)]
                   for name, (off, shape) in model.param_spec().items()],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = b"".join(
        np.ascontiguousarray(arr, dtype="<f8").tobytes()
        for arr in (model.get_flat(), state.m, state.v))
    body = (_CHECKPOINT_MAGIC + struct.pack("<II", _CHECKPOINT_VERSION, len(header_bytes))
            + header_bytes + payload)
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(hashlib.sha256(body).digest())


def load_checkpoint(path) -> tuple[Model, AdamWState, TrainConfig, int]:
    """Rebuild (model, optimizer state, train config, next epoch) bit-exactly."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_CHECKPOINT_MAGIC) + 8 + 32:
        raise CheckpointError("truncated checkpoint (shorter than any valid file)")
    body, digest = blob[:-32], blob[-32:]
    if body[:4] != _CHECKPOINT_MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checksum failure: checkpoint is corrupted")
    version, header_len = struct.unpack("<II", body[4:12])
    if version != _CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {version} unsupported (expected {_CHECKPOINT_VERSION})")
    header_end = 12 + header_len
    try:
        header = json.loads(body[12:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc
    n = int(header["n_params"])
    payload = body[header_end:]
    if len(payload) != 3 * 8 * n:
        raise CheckpointError(
            f"truncated checkpoint payload: {len(payload)} bytes for {n} parameters")
    arrays = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(3, n)

    model = Model(ModelConfig.from_dict(header["model_config"]), seed=header["model_seed"])
    if model.n_parameters != n:
        raise CheckpointError("parameter count disagrees with the stored config")
    stored_spec = [[name, off, list(shape)]
                   for name, (off, shape) in model.param_spec().items()]
    if stored_spec != header["params"]:
        raise CheckpointError("named parameter layout disagrees with the stored config")
    model.set_flat(arrays[0])

    train_config = TrainConfig.from_dict(header["train_config"])
    adam = header["adam"]
    state = AdamWState(
        m=arrays[1].copy(), v=arrays[2].copy(), t=int(adam["t"]),
        beta1=adam["beta1"], beta2=adam["beta2"], eps=adam["eps"],
        weight_decay=adam["weight_decay"],
        decay_mask=build_decay_mask(model, train_config.decay_all))
    return model, state, train_config, int(header["epoch_next"])
