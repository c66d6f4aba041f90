import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from graphmga import attack
from graphmga.attack import AttackConfig
from graphmga.cli import config_hash, load_dataset, main, parse_args
from graphmga.evaluation import evaluate
from graphmga.gcn import GcnModel, load_checkpoint
from graphmga.graph import Graph, LabelAssignment

GEN = ["--gen-n", "60", "--p-in", "0.3", "--p-out", "0.02", "--seed", "3"]


def run(*argv):
    return main([str(a) for a in argv])


def tree(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("trained")
    assert run("train", *GEN, "--out", out) == 0
    return out


def test_gen_writes_loadable_files(tmp_path):
    assert run("gen", *GEN, "--out", tmp_path) == 0
    out = tmp_path / "t"
    assert run("train", "--edges", tmp_path / "edges.tsv", "--labels", tmp_path / "labels.tsv",
               "--seed", 3, "--out", out) == 0
    metrics = json.loads((out / "train_metrics.json").read_text())
    assert metrics["accuracy"]["test"] > 0.9


def test_train_is_byte_identical(trained, tmp_path):
    assert run("train", *GEN, "--out", tmp_path) == 0
    assert tree(tmp_path) == tree(trained)


def test_missing_label_file_exit_2(tmp_path, capsys):
    (tmp_path / "e.tsv").write_text("0\t1\n")
    missing = tmp_path / "nope.tsv"
    assert run("train", "--edges", tmp_path / "e.tsv", "--labels", missing, "--out", tmp_path) == 2
    assert str(missing) in capsys.readouterr().err


def test_bad_edge_line_exit_2(tmp_path, capsys):
    (tmp_path / "e.tsv").write_text("0\t1\n1\tx\n")
    (tmp_path / "l.tsv").write_text("0\t0\n1\t1\n")
    assert run("train", "--edges", tmp_path / "e.tsv", "--labels", tmp_path / "l.tsv", "--out", tmp_path) == 2
    assert "e.tsv:2" in capsys.readouterr().err


def test_dataset_source_must_be_unique(tmp_path):
    assert run("train", "--out", tmp_path) == 2
    (tmp_path / "e.tsv").write_text("0\t1\n")
    assert run("train", *GEN, "--edges", tmp_path / "e.tsv", "--out", tmp_path) == 2


def test_attack_without_checkpoint_exit_2(tmp_path, capsys):
    assert run("attack", *GEN, "--out", tmp_path) == 2
    assert "checkpoint" in capsys.readouterr().err


def test_unknown_subcommand_and_flag():
    assert run("explode") == 2
    assert run("train", "--no-such-flag") == 2


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nbudget = 7\nmu = 0.25\nstop-on-success = true\ngen_n = 60\n")
    args = parse_args(["attack", "--config", str(cfg), "--budget", "9"])
    assert (args.budget, args.mu, args.stop_on_success, args.gen_n) == (9, 0.25, True, 60)
    cfg.write_text("bogus = 1\n")
    assert run("attack", "--config", cfg) == 2
    assert run("attack", "--config", tmp_path / "absent.cfg") == 2


def test_config_hash_ignores_output_location():
    a = parse_args(["attack", *map(str, GEN), "--out", "x", "--workers", "4"])
    b = parse_args(["attack", *map(str, GEN), "--out", "y"])
    c = parse_args(["attack", *map(str, GEN), "--budget", "5"])
    assert config_hash(a) == config_hash(b) != config_hash(c)


@pytest.fixture(scope="module")
def attacked(trained, tmp_path_factory):
    out = tmp_path_factory.mktemp("attacked")
    ckpt = trained / "model.ckpt"
    assert run("attack", *GEN, "--checkpoint", ckpt, "--count", 3, "--out", out,
               "--transfer-seeds", "0,1") == 0
    return out, ckpt


def test_attack_outputs(attacked):
    out, _ = attacked
    files = sorted((out / "perturbations").glob("target_*.tsv"))
    assert len(files) == 6
    doc = json.loads((out / "report.json").read_text())
    assert len(doc["asr"]) == 20 and 1 <= doc["aml"] <= 20
    assert [t["seed"] for t in doc["transfer"]] == [8, 9]  # seed 3 + transfer offset 5
    digest = doc["config"]["config_hash"]
    assert all(f"config_hash={digest}" in f.read_text() for f in files)
    assert (out / "asr_curve.csv").read_text().splitlines()[1] == "budget,asr"


def test_attack_rerun_identical_and_fga_distinct(attacked, tmp_path):
    out, ckpt = attacked
    again = tmp_path / "again"
    assert run("attack", *GEN, "--checkpoint", ckpt, "--count", 3, "--out", again,
               "--transfer-seeds", "0,1", "--workers", 3) == 0
    assert tree(again) == tree(out)
    fga = tmp_path / "fga"
    assert run("attack", *GEN, "--checkpoint", ckpt, "--count", 3, "--out", fga, "--method", "fga") == 0
    doc = json.loads((fga / "report.json").read_text())
    assert doc["config"]["method"] == "FGA"
    assert doc["config"]["config_hash"] != json.loads((out / "report.json").read_text())["config"]["config_hash"]


def test_analyze_rows(attacked, tmp_path):
    out, _ = attacked
    assert run("analyze", "--report-dir", out, "--out", tmp_path) == 0
    lines = (tmp_path / "link_analysis.csv").read_text().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    assert body[0].startswith("gamma,D,B,A_s,A_d,n_t")
    assert len(body) == 21
    assert run("analyze", "--report-dir", out, "--out", tmp_path / "b", "--max-gamma", 5) == 0
    assert len((tmp_path / "b" / "link_analysis.csv").read_text().splitlines()) == 2 + 6


def test_analyze_corrupted_line(attacked, tmp_path, capsys):
    out, _ = attacked
    copy = tmp_path / "copy"
    shutil.copytree(out, copy)
    victim = sorted((copy / "perturbations").glob("*.tsv"))[1]
    lines = victim.read_text().splitlines()
    lines[4] = "garbage"
    victim.write_text("\n".join(lines) + "\n")
    assert run("analyze", "--report-dir", copy) == 2
    assert f"{victim.name}:5" in capsys.readouterr().err


def test_analyze_empty_dir(tmp_path):
    assert run("analyze", "--report-dir", tmp_path) == 2


def test_direct_mode_isolated_target_is_graceful():
    g = Graph.from_edges(4, [(0, 1), (1, 2), (0, 2)])
    labels = LabelAssignment([0, 0, 0, 1], 2)
    X = np.eye(4)
    # output weights tied to class 1 regardless of neighbourhood
    model = GcnModel(np.ones((4, 2)), np.array([[0.0, 1.0], [0.0, 1.0]]))
    p = attack.run_attack(model, g, X, labels, 3, AttackConfig(mode="direct", budget=5))
    assert p.success_step is None
    assert all(3 in pair for pair in p.pairs())


def test_ablate_knowledge_grid(trained, tmp_path):
    ckpt = trained / "model.ckpt"
    args = ("ablate-knowledge", *GEN, "--checkpoint", ckpt, "--budget", 10, "--target-fraction", 0.05)
    assert run(*args, "--out", tmp_path / "a") == 0
    rows = (tmp_path / "a" / "knowledge_ablation.csv").read_text().splitlines()
    assert rows[1] == "mode,p_miss,method,asr,aml,n_targets" and len(rows) == 2 + 6
    assert run(*args, "--out", tmp_path / "b", "--workers", 2) == 0
    assert tree(tmp_path / "a") == tree(tmp_path / "b")
    assert run(*args, "--out", tmp_path / "z", "--p-miss", "0", "--lk-modes", "random") == 0
    zero = (tmp_path / "z" / "knowledge_ablation.csv").read_text().splitlines()[2].split(",")
    doc = json.loads((tmp_path / "a" / "knowledge_ablation.json").read_text())
    assert len(doc["targets"]) == 3
    model = load_checkpoint(ckpt)
    ns = parse_args(["attack", *map(str, GEN)])
    g, labels, X = load_dataset(ns)
    perts = [attack.run_attack(model, g, X, labels, t, AttackConfig(budget=10)) for t in doc["targets"]]
    rep = evaluate(perts, 10)
    assert float(zero[3]) == rep.asr[-1] and float(zero[4]) == rep.aml


def test_deceive_report(tmp_path):
    args = ("deceive", "--gen-n", 60, "--p-in", 0.4, "--p-out", 0.02, "--count", 4)
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    assert tree(tmp_path / "a") == tree(tmp_path / "b")
    rows = (tmp_path / "a" / "deception_table.csv").read_text().splitlines()
    assert rows[1] == "dataset,method,asr_percent,aml"
    for row in rows[2:]:
        _, _, asr, aml = row.split(",")
        assert 0 <= float(asr) <= 100 and float(aml) <= 20
    assert (tmp_path / "a" / "partition.tsv").is_file()
