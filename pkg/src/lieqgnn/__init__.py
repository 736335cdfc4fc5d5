"""Lorentz-equivariant hybrid quantum/classical jet tagging.

A numpy-only stack: Minkowski geometry helpers, an exact statevector
circuit simulator with parameter-shift and reverse-sweep gradients, a small
reverse-mode tape, the equivariant graph network itself, a jet data
pipeline, and an AdamW training loop with warm-up + cosine annealing.
"""
from .minkowski import (
    METRIC,
    apply_transform,
    boost_z,
    four_vector,
    is_lorentz,
    minkowski_inner,
    minkowski_sq_norm,
    psi,
    random_lorentz,
)
from .qsim import (
    AnsatzConfig,
    StateVector,
    brick_layout,
    dense_unitary_oracle,
    grad_ansatz,
    run_ansatz,
    run_ansatz_batch,
)
from .autodiff import Tensor, Tape, backward
from .model import (
    JetGraph,
    Model,
    ModelConfig,
    REFERENCE_PARAM_TOTALS,
    VARIANTS,
    count_parameters,
    euclidean_equivariant_update,
    model_forward,
)
from .data import (
    JetEntry,
    ParticleRecord,
    SplitSpec,
    jet_to_graph,
    load_jets,
    pid_features,
    reconstruct_four_momentum,
    split_dataset,
    synthetic_jets,
    write_jets,
)
from .train import (
    AdamWState,
    EpochMetrics,
    LrSchedule,
    TrainConfig,
    adamw_step,
    evaluate,
    fit,
    load_checkpoint,
    lr_at,
    save_checkpoint,
    train_epoch,
)

__version__ = "0.1.0"

__all__ = [
    "METRIC", "apply_transform", "boost_z", "four_vector", "is_lorentz",
    "minkowski_inner", "minkowski_sq_norm", "psi", "random_lorentz",
    "AnsatzConfig", "StateVector", "brick_layout", "dense_unitary_oracle",
    "grad_ansatz", "run_ansatz", "run_ansatz_batch",
    "Tensor", "Tape", "backward",
    "JetGraph", "Model", "ModelConfig", "REFERENCE_PARAM_TOTALS", "VARIANTS",
    "count_parameters", "euclidean_equivariant_update", "model_forward",
    "JetEntry", "ParticleRecord", "SplitSpec", "jet_to_graph", "load_jets",
    "pid_features", "reconstruct_four_momentum", "split_dataset",
    "synthetic_jets", "write_jets",
    "AdamWState", "EpochMetrics", "LrSchedule", "TrainConfig", "adamw_step",
    "evaluate", "fit", "load_checkpoint", "lr_at", "save_checkpoint",
    "train_epoch",
    "__version__",
]
