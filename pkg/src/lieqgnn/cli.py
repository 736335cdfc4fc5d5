"""Command-line surface for the package.

Subcommands: synth-data, train, eval, equivariance-test, grad-check,
param-count, plot.  Exit codes: 0 success, 1 usage error, 2 data error
(unreadable/malformed inputs, bad checkpoints), 3 tolerance violation
(failed symmetry or gradient check, non-finite loss during training).

Every file-producing command also writes its fully-resolved configuration
as JSON next to its outputs.  The LIE_EQGNN_THREADS environment variable
caps worker parallelism for training and evaluation.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    DataFormatError,
    SplitSpec,
    jet_to_graph,
    load_jets,
    split_dataset,
    synthetic_jets,
    write_jets,
)
from .minkowski import random_lorentz
from .model import (
    Model,
    ModelConfig,
    REFERENCE_PARAM_TOTALS,
    VARIANTS,
    count_parameters,
)
from . import autodiff as ad
from .train import (
    CheckpointError,
    TrainConfig,
    TrainingAborted,
    evaluate,
    fit,
    load_checkpoint,
    read_metrics,
    resolve_threads,
    save_checkpoint,
    write_metrics,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TOLERANCE = 3

_VARIANT_CHOICES = ("phi_e", "phi_x", "phi_h", "phi_m", "full_quantum", "classical")


class ToleranceViolation(RuntimeError):
    """A checked bound was exceeded; maps to exit code 3."""


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_run_config(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def build_parser() -> _Parser:
    parser = _Parser(prog="lieqgnn",
                     description="Lorentz-equivariant hybrid quark/gluon jet tagger")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("synth-data", help="generate a synthetic JSONL jet file")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--n-per-class", required=True, type=int)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train one variant on a JSONL jet file")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--variant", required=True, choices=_VARIANT_CHOICES)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--max-particles", type=int, default=16)
    p.add_argument("--base-lr", type=float, default=1e-3)
    p.add_argument("--c", type=float, default=None, metavar="C",
                   help="aggregation constant (default: model default)")

    p = sub.add_parser("eval", help="loss/accuracy of a checkpoint on a jet file")
    p.add_argument("--checkpoint", required=True, type=Path)
    p.add_argument("--data", required=True, type=Path)

    p = sub.add_parser("equivariance-test",
                       help="max logit deviation under random Lorentz transforms")
    p.add_argument("--checkpoint", required=True, type=Path)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-rapidity", type=float, default=1.0)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("grad-check",
                       help="backward pass vs central finite differences")
    p.add_argument("--variant", required=True, choices=_VARIANT_CHOICES)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--n-coords", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("param-count", help="trainable-parameter breakdown")
    p.add_argument("--variant", required=True, choices=_VARIANT_CHOICES)

    p = sub.add_parser("plot", help="render loss/accuracy curves from a metrics CSV")
    p.add_argument("--metrics", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    return parser


# ---------------------------------------------------------------------------
# commands


def _cmd_synth_data(args) -> int:
    jets = synthetic_jets(args.n_per_class, seed=args.seed)
    write_jets(args.out, jets)
    _write_run_config(args.out.with_suffix(".config.json"), {
        "command": "synth-data",
        "out": str(args.out),
        "n_per_class": args.n_per_class,
        "seed": args.seed,
        "n_jets": len(jets),
    })
    print(f"wrote {len(jets)} jets to {args.out}")
    return EXIT_OK


def _split_spec_for(n_jets: int, seed: int) -> SplitSpec:
    """Standard 10000/1250/1250 when the file is big enough, else 80/10/10."""
    default = SplitSpec(seed=seed)
    if n_jets >= default.total:
        return default
    n_val = max(1, n_jets // 10)
    n_test = n_jets // 10
    n_train = n_jets - n_val - n_test
    if n_train < 1:
        raise DataFormatError(f"dataset too small to split: {n_jets} jets")
    return SplitSpec(n_train=n_train, n_val=n_val, n_test=n_test, seed=seed)


def _cmd_train(args) -> int:
    jets = load_jets(args.data, min_particles=10, max_particles=args.max_particles)
    if not jets:
        raise DataFormatError(f"{args.data}: no jets survived filtering")
    spec = _split_spec_for(len(jets), args.seed)
    train_jets, val_jets, _ = split_dataset(jets, spec)
    overrides = {} if args.c is None else {"c": args.c}
    model_config = ModelConfig(variant=args.variant,
                               max_particles=args.max_particles, **overrides)
    to_graph = lambda js: [jet_to_graph(j, max_particles=args.max_particles) for j in js]
    model = Model(model_config, seed=args.seed)
    train_config = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                               seed=args.seed, base_lr=args.base_lr)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    threads = resolve_threads()

    def report(row):
        print(f"epoch {row.epoch:3d}  train_loss {row.train_loss:.4f}  "
              f"val_loss {row.val_loss:.4f}  train_acc {row.train_acc:.4f}  "
              f"val_acc {row.val_acc:.4f}  lr {row.lr:.2e}  {row.seconds:.1f}s")

    rows, state = fit(model, to_graph(train_jets), to_graph(val_jets), train_config,
                      threads=threads, on_epoch=report)

    metrics_path = args.out_dir / "metrics.csv"
    ckpt_path = args.out_dir / "model.ckpt"
    config_path = args.out_dir / "config.json"
    write_metrics(metrics_path, rows)
    save_checkpoint(ckpt_path, model, state, train_config, epoch_next=train_config.epochs)
    _write_run_config(config_path, {
        "command": "train",
        "data": str(args.data),
        "model_config": model_config.to_dict(),
        "model_seed": args.seed,
        "train_config": train_config.to_dict(),
        "split": {"n_train": spec.n_train, "n_val": spec.n_val,
                  "n_test": spec.n_test, "seed": spec.seed},
        "threads": threads,
        "artifacts": [metrics_path.name, ckpt_path.name, config_path.name],
    })
    print(f"final val_acc {rows[-1].val_acc:.4f}; artifacts in {args.out_dir}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    model, _state, _config, _epoch = load_checkpoint(args.checkpoint)
    jets = load_jets(args.data, min_particles=10,
                     max_particles=model.config.max_particles)
    if not jets:
        raise DataFormatError(f"{args.data}: no jets survived filtering")
    graphs = [jet_to_graph(j, max_particles=model.config.max_particles) for j in jets]
    loss, acc = evaluate(model, graphs, threads=resolve_threads())
    print(f"loss {loss:.6f}  accuracy {acc:.4f}  ({len(graphs)} jets)")
    return EXIT_OK


def _cmd_equivariance_test(args) -> int:
    model, _state, _config, _epoch = load_checkpoint(args.checkpoint)
    cap = model.config.max_particles
    graphs = [jet_to_graph(j, max_particles=cap)
              for j in synthetic_jets(5, seed=args.seed)]
    base = [model.logits(g) for g in graphs]
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for trial in range(args.trials):
        g = graphs[trial % len(graphs)]
        lam = random_lorentz(rng, max_rapidity=args.max_rapidity)
        dev = float(np.max(np.abs(model.logits(g.transformed(lam)) - base[trial % len(graphs)])))
        worst = max(worst, dev)
    verdict = "OK" if worst <= args.tolerance else "FAIL"
    print(f"max logit deviation {worst:.3e} over {args.trials} transforms "
          f"(rapidity <= {args.max_rapidity}, tolerance {args.tolerance:.1e}): {verdict}")
    if worst > args.tolerance:
        raise ToleranceViolation(f"deviation {worst:.3e} exceeds {args.tolerance:.1e}")
    return EXIT_OK


def _cmd_grad_check(args) -> int:
    model = Model(ModelConfig(variant=args.variant), seed=args.seed)
    graphs = [jet_to_graph(j, max_particles=8)
              for j in synthetic_jets(2, seed=args.seed)]

    def total_loss():
        return sum(model.loss(g)[0].item() for g in graphs) / len(graphs)

    model.zero_grad()
    for g in graphs:
        loss, _logits = model.loss(g)
        ad.backward(loss, seed=1.0 / len(graphs))
    grad = model.grad_flat()
    flat = model.get_flat()
    rng = np.random.default_rng(args.seed)
    coords = rng.choice(flat.size, size=min(args.n_coords, flat.size), replace=False)
    step = 1e-6
    worst = 0.0
    failed = 0
    for k in coords:
        probe = flat.copy()
        probe[k] = flat[k] + step
        model.set_flat(probe)
        hi = total_loss()
        probe[k] = flat[k] - step
        model.set_flat(probe)
        lo = total_loss()
        model.set_flat(flat)
        fd = (hi - lo) / (2.0 * step)
        diff = abs(grad[k] - fd)
        worst = max(worst, diff)
        if diff > max(args.tolerance, 1e-4 * abs(grad[k])):
            failed += 1
    verdict = "OK" if failed == 0 else "FAIL"
    print(f"checked {len(coords)} coordinates, max |backward - fd| = {worst:.3e} "
          f"(tolerance {args.tolerance:.1e}): {verdict}")
    if failed:
        raise ToleranceViolation(f"{failed} coordinates exceeded the tolerance")
    return EXIT_OK


def _cmd_param_count(args) -> int:
    config = ModelConfig(variant=args.variant)
    counts = count_parameters(config)
    total = counts.pop("total")
    print(f"variant: {args.variant}")
    print(f"{'component':<16}{'kind':<12}{'parameters':>10}")
    for name, n in counts.items():
        slot = name.split(".")[-1]
        kind = "quantum" if slot in config.quantum_slots else \
            ("affine" if name in ("embed", "decode") else "classical")
        print(f"{name:<16}{kind:<12}{n:>10}")
    print(f"{'total':<28}{total:>10}")
    if config.quantum_slots:
        print(f"circuit angles per quantum MLP: {config.ansatz.n_params}")
    reference = ", ".join(f"{k} {v}" for k, v in REFERENCE_PARAM_TOTALS.items())
    print(f"reference totals from the original study (documentation only, "
          f"hidden widths unpublished): {reference}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = read_metrics(args.metrics)
    if not rows:
        raise DataFormatError(f"{args.metrics}: no metric rows")
    epochs = [r.epoch for r in rows]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    ax_loss.plot(epochs, [r.train_loss for r in rows], "b--", label="train")
    ax_loss.plot(epochs, [r.val_loss for r in rows], "-", color="tab:orange",
                 label="validation")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("cross-entropy loss")
    ax_loss.legend()
    ax_acc.plot(epochs, [r.train_acc for r in rows], "b--", label="train")
    ax_acc.plot(epochs, [r.val_acc for r in rows], "-", color="tab:orange",
                label="validation")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.legend()
    fig.tight_layout()
    fig.savefig(args.out, format="svg")
    plt.close(fig)
    _write_run_config(args.out.with_suffix(".config.json"), {
        "command": "plot",
        "metrics": str(args.metrics),
        "out": str(args.out),
        "rows": len(rows),
    })
    print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {
    "synth-data": _cmd_synth_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "equivariance-test": _cmd_equivariance_test,
    "grad-check": _cmd_grad_check,
    "param-count": _cmd_param_count,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (DataFormatError, CheckpointError, FileNotFoundError, IsADirectoryError,
            PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ToleranceViolation, TrainingAborted) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
