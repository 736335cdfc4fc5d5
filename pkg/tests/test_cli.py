"""Exit-code, artifact, and determinism checks for the command surface."""
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from lieqgnn.cli import main
from lieqgnn.data import load_jets
from lieqgnn.model import Model, ModelConfig, count_parameters
from lieqgnn.train import (
    AdamWState,
    TrainConfig,
    build_decay_mask,
    read_metrics,
    save_checkpoint,
)


def run(*argv):
    return main([str(a) for a in argv])


def make_data(tmp_path, n_per_class=12, seed=0, name="jets.jsonl"):
    path = tmp_path / name
    assert run("synth-data", "--out", path, "--n-per-class", n_per_class,
               "--seed", seed) == 0
    return path


def fresh_checkpoint(tmp_path, variant="classical", seed=0):
    model = Model(ModelConfig(variant=variant), seed=seed)
    config = TrainConfig(epochs=2, batch_size=4, seed=seed)
    state = AdamWState.zeros(model.n_parameters,
                             decay_mask=build_decay_mask(model))
    path = tmp_path / "fresh.ckpt"
    save_checkpoint(path, model, state, config, epoch_next=0)
    return path


# ---------------------------------------------------------------------------
# synth-data


def test_synth_data_writes_expected_lines(tmp_path, capsys):
    path = make_data(tmp_path, n_per_class=10)
    assert len(path.read_text().splitlines()) == 20
    assert "20 jets" in capsys.readouterr().out
    # reloads without filtering losses
    assert len(load_jets(path, min_particles=10)) == 20
    # resolved config sidecar
    sidecar = json.loads((tmp_path / "jets.config.json").read_text())
    assert sidecar["n_per_class"] == 10 and sidecar["seed"] == 0


def test_synth_data_deterministic(tmp_path):
    a = make_data(tmp_path, seed=5, name="a.jsonl")
    b = make_data(tmp_path, seed=5, name="b.jsonl")
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# usage errors


def test_unknown_variant_rejected_with_valid_list(tmp_path, capsys):
    data = make_data(tmp_path)
    code = run("train", "--data", data, "--variant", "phi_q",
               "--out-dir", tmp_path / "out")
    assert code == 1
    err = capsys.readouterr().err
    for name in ("phi_e", "phi_x", "phi_h", "phi_m", "full_quantum", "classical"):
        assert name in err


def test_missing_required_flag_is_usage_error(capsys):
    assert run("train", "--variant", "classical") == 1
    assert run("no-such-command") == 1
    assert run() == 1


def test_missing_data_file_is_data_error(tmp_path, capsys):
    code = run("train", "--data", tmp_path / "absent.jsonl",
               "--variant", "classical", "--out-dir", tmp_path / "out")
    assert code == 2


# ---------------------------------------------------------------------------
# train


def test_train_writes_three_artifacts(tmp_path, capsys):
    data = make_data(tmp_path, n_per_class=12)
    out = tmp_path / "run"
    code = run("train", "--data", data, "--variant", "classical",
               "--epochs", 2, "--batch-size", 8, "--seed", 1, "--out-dir", out)
    assert code == 0
    assert (out / "metrics.csv").exists()
    assert (out / "model.ckpt").exists()
    assert (out / "config.json").exists()
    rows = read_metrics(out / "metrics.csv")
    assert [r.epoch for r in rows] == [0, 1]
    resolved = json.loads((out / "config.json").read_text())
    assert resolved["model_config"]["variant"] == "classical"
    assert resolved["train_config"]["epochs"] == 2
    assert set(resolved["artifacts"]) == {"metrics.csv", "model.ckpt", "config.json"}


def test_train_identical_seeds_identical_metrics(tmp_path):
    data = make_data(tmp_path, n_per_class=12)
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert run("train", "--data", data, "--variant", "phi_m", "--epochs", 2,
                   "--batch-size", 8, "--seed", 7, "--out-dir", out) == 0
        outs.append(out)
    rows = [read_metrics(o / "metrics.csv") for o in outs]
    strip = lambda rs: [(r.epoch, r.train_loss, r.val_loss, r.train_acc, r.val_acc, r.lr)
                        for r in rs]
    assert strip(rows[0]) == strip(rows[1])
    # checkpoints byte-identical too (no timestamps inside)
    assert (outs[0] / "model.ckpt").read_bytes() == (outs[1] / "model.ckpt").read_bytes()


def test_train_c_override_recorded_in_config(tmp_path):
    data = make_data(tmp_path, n_per_class=12)
    out = tmp_path / "run"
    assert run("train", "--data", data, "--variant", "classical", "--epochs", 1,
               "--batch-size", 8, "--out-dir", out, "--c", 0.25) == 0
    resolved = json.loads((out / "config.json").read_text())
    assert resolved["model_config"]["c"] == 0.25


def test_train_malformed_data_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{broken\n")
    assert run("train", "--data", bad, "--variant", "classical",
               "--out-dir", tmp_path / "out") == 2
    assert "bad.jsonl:1" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# eval / equivariance-test / grad-check


def test_eval_prints_accuracy(tmp_path, capsys):
    data = make_data(tmp_path, n_per_class=12)
    out = tmp_path / "run"
    assert run("train", "--data", data, "--variant", "classical", "--epochs", 2,
               "--batch-size", 8, "--out-dir", out) == 0
    capsys.readouterr()
    assert run("eval", "--checkpoint", out / "model.ckpt", "--data", data) == 0
    printed = capsys.readouterr().out
    assert "accuracy" in printed and "loss" in printed


def test_eval_corrupt_checkpoint_is_data_error(tmp_path, capsys):
    data = make_data(tmp_path)
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a checkpoint at all")
    assert run("eval", "--checkpoint", bad, "--data", data) == 2


def test_equivariance_test_passes_on_fresh_checkpoint(tmp_path, capsys):
    ckpt = fresh_checkpoint(tmp_path, variant="phi_e")
    assert run("equivariance-test", "--checkpoint", ckpt, "--trials", 20,
               "--max-rapidity", 1.0) == 0
    assert "OK" in capsys.readouterr().out


def test_equivariance_test_tolerance_violation_exits_3(tmp_path, capsys):
    # The network is invariant by construction, so the measured deviation can
    # round to exactly 0.0; a negative bound is the one deterministic way to
    # drive the failure branch.
    ckpt = fresh_checkpoint(tmp_path)
    assert run("equivariance-test", "--checkpoint", ckpt, "--trials", 5,
               "--tolerance=-1") == 3
    assert "FAIL" in capsys.readouterr().out


def test_grad_check_passes_and_fails_by_tolerance(tmp_path, capsys):
    assert run("grad-check", "--variant", "classical", "--n-coords", 10) == 0
    assert "OK" in capsys.readouterr().out
    assert run("grad-check", "--variant", "classical", "--n-coords", 10,
               "--tolerance", "0") == 3


# ---------------------------------------------------------------------------
# param-count


def test_param_count_full_quantum(capsys):
    assert run("param-count", "--variant", "full_quantum") == 0
    out = capsys.readouterr().out
    assert "circuit angles per quantum MLP: 12" in out
    total = count_parameters(ModelConfig(variant="full_quantum"))["total"]
    assert str(total) in out
    # reference totals printed as documentation
    for n in (668, 1100, 1090, 998, 592, 1088):
        assert str(n) in out


def test_param_count_classical_matches_model(capsys):
    assert run("param-count", "--variant", "classical") == 0
    out = capsys.readouterr().out
    model = Model(ModelConfig(variant="classical"), seed=0)
    assert str(model.n_parameters) in out


# ---------------------------------------------------------------------------
# plot


def test_plot_emits_wellformed_svg(tmp_path, capsys):
    data = make_data(tmp_path, n_per_class=12)
    out = tmp_path / "run"
    assert run("train", "--data", data, "--variant", "classical", "--epochs", 2,
               "--batch-size", 8, "--out-dir", out) == 0
    svg = tmp_path / "curves.svg"
    assert run("plot", "--metrics", out / "metrics.csv", "--out", svg) == 0
    tree = ET.parse(svg)
    assert tree.getroot().tag.endswith("svg")
    assert (tmp_path / "curves.config.json").exists()


def test_plot_malformed_csv_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n")
    assert run("plot", "--metrics", bad, "--out", tmp_path / "x.svg") == 2
