import json
import os

import numpy as np
import pytest

from specopt import eigendecompose, load_basis, spectral_reg
from specopt.cli import main
from specopt.config import load_config
from specopt.reports import TRACE_HEADER
from specopt.runner import build_task, initial_theta


def write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    return str(path)


def base_config(**overrides):
    doc = {
        "graph": {"kind": "layer_chain", "group_sizes": [3, 3], "intra_w": 0.5, "inter_w": 1.0},
        "task": {"kind": "node_regression", "dim": 2, "cutoff": 2, "noise_sd": 0.2, "m": 3},
        "optimizer": {
            "eta": 0.1,
            "max_steps": 3,
            "lambda": 0.1,
            "filter": {"variant": "heat", "t": 0.3},
        },
        "variants": ["task_only", "joint"],
        "seeds": [0],
        "threshold": 0.05,
    }
    doc.update(overrides)
    return doc


def read_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


# ---------------------------------------------------------------------------
# decompose
# ---------------------------------------------------------------------------


def test_decompose_single_edge_stdout(tmp_path, capsys):
    cfg = write_json(tmp_path / "g.json", {"n": 2, "edges": [[0, 1, 1.0]]})
    code = main(["decompose", "--config", cfg, "--out", str(tmp_path)])
    assert code == 0
    assert capsys.readouterr().out.strip() == "0 2"
    basis = load_basis(tmp_path / "basis.json")
    np.testing.assert_array_equal(basis.eigenvalues, [0.0, 2.0])


def test_decompose_path_graph_values(tmp_path, capsys):
    cfg = write_json(tmp_path / "g.json", {"n": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0]]})
    assert main(["decompose", "--config", cfg, "--out", str(tmp_path)]) == 0
    values = [float(v) for v in capsys.readouterr().out.split()]
    np.testing.assert_allclose(values, [0.0, 1.0, 3.0], atol=1e-9)


def test_decompose_malformed_json_exit_2_no_output(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code = main(["decompose", "--config", str(bad), "--out", str(tmp_path / "out")])
    assert code == 2
    assert not (tmp_path / "out" / "basis.json").exists()
    assert "error" in capsys.readouterr().err


def test_decompose_invalid_field_named(tmp_path, capsys):
    cfg = write_json(tmp_path / "g.json", {"n": 2, "edgez": [[0, 1, 1.0]]})
    assert main(["decompose", "--config", cfg, "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "edges" in err or "edgez" in err


def test_decompose_missing_file_exit_2(tmp_path):
    assert main(["decompose", "--config", str(tmp_path / "nope.json")]) == 2


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def test_train_csv_shape_and_header(tmp_path):
    cfg = write_json(tmp_path / "c.json", base_config())
    out = tmp_path / "out"
    assert main(["train", "--config", cfg, "--out", str(out), "--no-plots"]) == 0
    lines = read_lines(out / "trace_joint_seed0.csv")
    assert lines[0] == TRACE_HEADER
    assert len(lines) == 4  # header + max_steps records
    summary = json.loads((out / "summary.json").read_text())
    assert {r["variant"] for r in summary["runs"]} == {"task_only", "joint"}


def test_train_repeat_invocations_byte_identical(tmp_path):
    cfg = write_json(tmp_path / "c.json", base_config(seeds=[0, 1]))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["train", "--config", cfg, "--out", str(out1), "--no-plots"]) == 0
    assert main(["train", "--config", cfg, "--out", str(out2), "--no-plots"]) == 0
    names = sorted(p for p in os.listdir(out1) if p.endswith(".csv"))
    assert names
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_train_task_only_spec_column_matches_offline_recompute(tmp_path):
    doc = base_config(variants=["task_only"])
    doc["optimizer"]["max_steps"] = 6
    cfg_path = write_json(tmp_path / "c.json", doc)
    out = tmp_path / "out"
    assert main(["train", "--config", cfg_path, "--out", str(out), "--no-plots"]) == 0

    # independently re-walk the trajectory: task_only is plain descent on the
    # task gradient, so the logged spec_loss must equal the smoothness energy
    # of each visited iterate even though it never steered the run
    cfg = load_config(cfg_path, need=("train",))
    g = cfg.build_graph()
    basis = eigendecompose(g.laplacian)
    task = build_task(cfg, basis, 0)
    theta = initial_theta(cfg, task, 0)
    rows = read_lines(out / "trace_task_only_seed0.csv")[1:]
    eta = cfg.optimizer["eta"]
    for row in rows:
        cells = row.split(",")
        assert float(cells[2]) == pytest.approx(spectral_reg(g, theta), abs=1e-9)
        assert float(cells[3]) == pytest.approx(float(cells[1]), abs=1e-12)  # lam=0
        theta = theta - eta * task.grad(theta)


def test_train_invalid_config_lists_every_violation(tmp_path, capsys):
    doc = base_config()
    doc["optimizer"]["eta"] = -1.0          # violation 1
    doc["variants"] = ["task_only", "bogus"]  # violation 2
    doc["typo_key"] = 3                      # violation 3
    cfg = write_json(tmp_path / "c.json", doc)
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "o"), "--no-plots"]) == 2
    err = capsys.readouterr().err
    assert "eta" in err and "bogus" in err and "typo_key" in err


def test_train_unknown_nested_key_rejected(tmp_path):
    doc = base_config()
    doc["task"]["noise"] = 0.1  # typo for noise_sd
    cfg = write_json(tmp_path / "c.json", doc)
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "o"), "--no-plots"]) == 2


def test_train_divergence_marks_run_and_exits_1(tmp_path):
    doc = base_config(variants=["spec_only", "joint"])
    doc["optimizer"].update({"eta": 1000.0, "lambda": 0.0, "max_steps": 50})
    cfg = write_json(tmp_path / "c.json", doc)
    out = tmp_path / "out"
    assert main(["train", "--config", cfg, "--out", str(out), "--no-plots"]) == 1
    summary = json.loads((out / "summary.json").read_text())
    by_variant = {r["variant"]: r for r in summary["runs"]}
    assert by_variant["joint"]["status"] == "diverged"
    assert "diagnostic" in by_variant["joint"]
    assert by_variant["spec_only"]["status"] == "completed"  # unaffected
    assert (out / "trace_spec_only_seed0.csv").exists()


def test_train_tiny_net_reports_accuracy(tmp_path):
    doc = base_config(
        graph={"kind": "layer_chain", "group_sizes": [4], "intra_w": 1.0, "inter_w": 0.0},
        task={"kind": "tiny_net", "widths": [3, 4, 2], "n_examples": 16},
    )
    cfg = write_json(tmp_path / "c.json", doc)
    out = tmp_path / "out"
    assert main(["train", "--config", cfg, "--out", str(out), "--no-plots"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert all(0.0 <= r["accuracy"] <= 1.0 for r in summary["runs"])


def test_train_graph_task_mismatch_is_config_error(tmp_path):
    doc = base_config(
        task={"kind": "tiny_net", "widths": [3, 5, 2]},  # hidden 5 vs graph 6
    )
    cfg = write_json(tmp_path / "c.json", doc)
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "o"), "--no-plots"]) == 2


def test_train_dump_datasets(tmp_path):
    doc = base_config(dump_datasets=True)
    cfg = write_json(tmp_path / "c.json", doc)
    out = tmp_path / "out"
    assert main(["train", "--config", cfg, "--out", str(out), "--no-plots"]) == 0
    doc = json.loads((out / "dataset_seed0.json").read_text())
    assert doc["kind"] == "node_regression"


def test_seed_offset_env_shifts_every_seed(tmp_path, monkeypatch):
    doc = base_config(seeds=[0])
    doc["task"]["signal_seed"] = 0
    cfg = write_json(tmp_path / "c.json", doc)
    out_shifted = tmp_path / "shifted"
    monkeypatch.setenv("SPECOPT_SEED_OFFSET", "5")
    assert main(["train", "--config", cfg, "--out", str(out_shifted), "--no-plots"]) == 0
    assert (out_shifted / "trace_joint_seed5.csv").exists()

    # offsetting by 5 must equal a run whose config carries the seeds pre-shifted
    monkeypatch.delenv("SPECOPT_SEED_OFFSET")
    direct_doc = base_config(seeds=[5])
    direct_doc["task"]["signal_seed"] = 5
    cfg_direct = write_json(tmp_path / "c5.json", direct_doc)
    out_direct = tmp_path / "direct"
    assert main(["train", "--config", cfg_direct, "--out", str(out_direct), "--no-plots"]) == 0
    assert (out_shifted / "trace_joint_seed5.csv").read_bytes() == (
        out_direct / "trace_joint_seed5.csv"
    ).read_bytes()


def test_figures_rendered_alongside_csv(tmp_path):
    cfg = write_json(tmp_path / "c.json", base_config())
    out = tmp_path / "out"
    assert main(["train", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "loss_curves.png").stat().st_size > 0
    assert (out / "trace_joint_seed0.csv").exists()


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def sweep_config(axis, values, **overrides):
    overrides.setdefault("seeds", [0, 1, 2])
    overrides.setdefault("variants", ["task_only", "joint"])
    doc = base_config(**overrides)
    doc["sweep"] = {"axis": axis, "values": values}
    doc["task"]["m"] = 4
    return doc


def test_sweep_emits_all_combinations(tmp_path):
    cfg = write_json(tmp_path / "c.json", sweep_config("sample_fraction", [0.2, 0.4, 0.6]))
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--no-plots"]) == 0
    lines = read_lines(out / "sweep.csv")
    assert lines[0] == "axis_value,variant,seed,final_task_loss,steps_to_threshold"
    assert len(lines) == 1 + 3 * 2 * 3  # header + values x variants x seeds


def test_sweep_lambda_zero_matches_task_only_train(tmp_path):
    doc = sweep_config("lambda", [0.0, 0.5], variants=["joint"])
    cfg = write_json(tmp_path / "c.json", doc)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--no-plots"]) == 0

    train_doc = dict(doc)
    del train_doc["sweep"]
    train_doc["variants"] = ["task_only"]
    cfg_train = write_json(tmp_path / "t.json", train_doc)
    out_train = tmp_path / "train"
    assert main(["train", "--config", cfg_train, "--out", str(out_train), "--no-plots"]) == 0
    summary = json.loads((out_train / "summary.json").read_text())
    train_final = {r["seed"]: r["final_task_loss"] for r in summary["runs"]}

    for line in read_lines(out / "sweep.csv")[1:]:
        value, _variant, seed, final_task_loss, _steps = line.split(",")
        if float(value) == 0.0:
            assert float(final_task_loss) == pytest.approx(train_final[int(seed)], abs=1e-12)


def test_sweep_full_fraction_matches_unswept_run(tmp_path):
    doc = sweep_config("sample_fraction", [1.0], variants=["joint"], seeds=[0])
    cfg = write_json(tmp_path / "c.json", doc)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--no-plots"]) == 0

    train_doc = dict(doc)
    del train_doc["sweep"]
    cfg_train = write_json(tmp_path / "t.json", train_doc)
    out_train = tmp_path / "train"
    assert main(["train", "--config", cfg_train, "--out", str(out_train), "--no-plots"]) == 0
    summary = json.loads((out_train / "summary.json").read_text())

    row = read_lines(out / "sweep.csv")[1].split(",")
    assert float(row[3]) == pytest.approx(summary["runs"][0]["final_task_loss"], abs=1e-15)


def test_sweep_requires_axis_section_and_threshold(tmp_path):
    doc = base_config()
    cfg = write_json(tmp_path / "c.json", doc)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o"), "--no-plots"]) == 2


def test_sweep_filter_param_identity_rejected(tmp_path):
    doc = sweep_config("filter_param", [0.1, 0.5])
    doc["optimizer"]["filter"] = {"variant": "identity"}
    cfg = write_json(tmp_path / "c.json", doc)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o"), "--no-plots"]) == 2


def test_sweep_empty_values_rejected(tmp_path):
    doc = sweep_config("lambda", [])
    cfg = write_json(tmp_path / "c.json", doc)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o"), "--no-plots"]) == 2


def test_sweep_filter_param_runs(tmp_path):
    doc = sweep_config("filter_param", [0.1, 1.0], variants=["joint_filtered"], seeds=[0])
    cfg = write_json(tmp_path / "c.json", doc)
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--no-plots"]) == 0
    assert len(read_lines(out / "sweep.csv")) == 3


# ---------------------------------------------------------------------------
# denoise
# ---------------------------------------------------------------------------


def denoise_config(filter_doc, noise_sds, seeds):
    return {
        "graph": {"kind": "layer_chain", "group_sizes": [4, 4], "intra_w": 0.5, "inter_w": 1.0},
        "seeds": seeds,
        "denoise": {"dim": 2, "cutoff": 2, "filter": filter_doc, "noise_sds": noise_sds},
    }


def test_denoise_identity_filter_changes_nothing(tmp_path):
    doc = denoise_config({"variant": "identity"}, [0.3, 0.6], [0, 1])
    cfg = write_json(tmp_path / "c.json", doc)
    out = tmp_path / "out"
    assert main(["denoise", "--config", cfg, "--out", str(out), "--no-plots"]) == 0
    lines = read_lines(out / "denoise.csv")
    assert lines[0] == "seed,noise_sd,mse_unfiltered,mse_filtered"
    for line in lines[1:]:
        cells = line.split(",")
        assert float(cells[2]) == pytest.approx(float(cells[3]), rel=1e-12)


def test_denoise_zero_noise_perfect_lowpass(tmp_path):
    # keep-count equal to the signal cutoff: unit gain on every occupied
    # frequency, so nothing is removed and nothing was there to remove
    doc = denoise_config({"variant": "ideal_lowpass", "k": 2}, [0.0], [0, 1, 2])
    cfg = write_json(tmp_path / "c.json", doc)
    out = tmp_path / "out"
    assert main(["denoise", "--config", cfg, "--out", str(out), "--no-plots"]) == 0
    for line in read_lines(out / "denoise.csv")[1:]:
        cells = line.split(",")
        assert float(cells[2]) == 0.0
        assert float(cells[3]) <= 1e-16


def test_denoise_heat_filter_usually_helps(tmp_path):
    doc = denoise_config({"variant": "heat", "t": 0.3}, [0.5], list(range(20)))
    cfg = write_json(tmp_path / "c.json", doc)
    out = tmp_path / "out"
    assert main(["denoise", "--config", cfg, "--out", str(out), "--no-plots"]) == 0
    rows = [line.split(",") for line in read_lines(out / "denoise.csv")[1:]]
    wins = sum(float(r[3]) < float(r[2]) for r in rows)
    assert wins >= 17


def test_denoise_figures(tmp_path):
    doc = denoise_config({"variant": "heat", "t": 0.3}, [0.2, 0.5], [0, 1, 2])
    cfg = write_json(tmp_path / "c.json", doc)
    out = tmp_path / "out"
    assert main(["denoise", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "denoise.png").stat().st_size > 0
    assert (out / "denoise.csv").exists()


def test_sweep_figures(tmp_path):
    cfg = write_json(tmp_path / "c.json", sweep_config("lambda", [0.0, 0.1], seeds=[0]))
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "sweep.png").stat().st_size > 0
