from __future__ import annotations

import json
import os

import numpy as np
import pytest

from fairrepair.cli import main
from fairrepair.embedding import EmbeddingConfig
from fairrepair.errors import ConfigError
from fairrepair.graphs import builtin_spec, generate_sbm, write_graph_files
from fairrepair.pipeline import (AGGREGATE_FIELDS, ExperimentConfig,
                                 load_config, run_single, run_sweep)

TINY_EMBEDDING = dict(dim=8, walk_length=6, window=3, walks_per_node=2,
                      epochs=1)


def _tiny_cfg(tmp_path, **overrides):
    kwargs = dict(name="exp", graph="G1", method="none",
                  embedding=EmbeddingConfig(**TINY_EMBEDDING),
                  seeds=[0, 1], out_dir=str(tmp_path / "runs"))
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


def test_experiment_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        _tiny_cfg(tmp_path, name="a/b")
    with pytest.raises(ConfigError):
        _tiny_cfg(tmp_path, graph=None)  # neither graph nor edges
    with pytest.raises(ConfigError):
        _tiny_cfg(tmp_path, edges="e.tsv")  # both
    with pytest.raises(ConfigError):
        ExperimentConfig(name="x", edges="e.tsv")  # edges without attrs
    with pytest.raises(ConfigError):
        _tiny_cfg(tmp_path, method="magic")
    with pytest.raises(ConfigError):
        _tiny_cfg(tmp_path, method="random")  # no target_mass
    with pytest.raises(ConfigError):
        _tiny_cfg(tmp_path, lambdas=[])
    with pytest.raises(ConfigError):
        _tiny_cfg(tmp_path, method="emd", lambdas=[0.0, 0.5])
    with pytest.raises(ConfigError):
        _tiny_cfg(tmp_path, seeds=[])
    with pytest.raises(ConfigError):
        _tiny_cfg(tmp_path, test_fraction=1.0)
    # laplacian may sweep lambdas; random with target mass is fine
    _tiny_cfg(tmp_path, method="laplacian", lambdas=[0.0, 1.0])
    _tiny_cfg(tmp_path, method="random", target_mass=10.0)


def test_load_config_round_trip_and_errors(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "name": "demo", "graph": "G2", "method": "emd",
        "seeds": [3, 4], "embedding": {"dim": 12, "epochs": 2},
    }))
    cfg = load_config(path)
    assert cfg.name == "demo"
    assert cfg.graph == "G2"
    assert cfg.seeds == [3, 4]
    assert cfg.embedding.dim == 12
    assert cfg.embedding.epochs == 2
    assert cfg.embedding.window == 10  # untouched default

    path.write_text(json.dumps({"name": "x", "graph": "G1", "typo_key": 1}))
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text(json.dumps([1, 2]))
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text(json.dumps({"name": "x", "graph": "G1",
                                "embedding": {"dim": 0}}))
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_run_single_none_method(tmp_path):
    cfg = _tiny_cfg(tmp_path)
    rep = run_single(cfg, 0.0, seed=0)
    assert 0.0 <= rep.link_auc <= 1.0
    assert rep.added_mass == 0.0
    assert np.isfinite(rep.consistency)
    assert np.isfinite(rep.representation_bias)
    assert np.isfinite(rep.assortativity)


def test_run_single_laplacian_zero_equals_emd(tmp_path):
    emd = run_single(_tiny_cfg(tmp_path, method="emd"), 0.0, seed=1)
    lap = run_single(_tiny_cfg(tmp_path, method="laplacian"), 0.0, seed=1)
    assert emd == lap


def test_run_sweep_outputs(tmp_path):
    cfg = _tiny_cfg(tmp_path)
    summary = run_sweep(cfg)
    assert summary["completed"] == 2 and summary["failed"] == 0
    base = summary["out_dir"]
    assert os.path.isfile(os.path.join(base, "config.json"))
    assert os.path.getsize(os.path.join(base, "failures.log")) == 0
    for seed in (0, 1):
        cell = os.path.join(base, str(seed), "lambda_0.json")
        assert os.path.isfile(cell)

    with open(os.path.join(base, "aggregate.csv")) as fh:
        header, row = fh.read().strip().split("\n")
    assert header.split(",")[0] == "lambda"
    assert len(header.split(",")) == 1 + 2 * len(AGGREGATE_FIELDS)
    cells = row.split(",")
    assert cells[0] == "0"
    # the aggregated means must match the per-cell reports
    reports = [json.load(open(os.path.join(base, str(s), "lambda_0.json")))
               for s in (0, 1)]
    want_di = np.mean([r["di_xor"] for r in reports])
    assert float(cells[1]) == pytest.approx(want_di, rel=1e-9, nan_ok=True)
    want_auc = np.mean([r["link_auc"] for r in reports])
    assert float(cells[5]) == pytest.approx(want_auc, rel=1e-9)

    with open(os.path.join(base, "plot_data.csv")) as fh:
        assert fh.readline().strip() == "lambda,DI,Cons,AUC,RB,assortativity"


def test_run_sweep_lambda_grid_and_tags(tmp_path):
    cfg = _tiny_cfg(tmp_path, method="laplacian", lambdas=[0.005, 0.0],
                    seeds=[0])
    summary = run_sweep(cfg)
    assert summary["completed"] == 2
    base = summary["out_dir"]
    assert os.path.isfile(os.path.join(base, "0", "lambda_0.json"))
    assert os.path.isfile(os.path.join(base, "0", "lambda_0.005.json"))
    with open(os.path.join(base, "aggregate.csv")) as fh:
        lines = fh.read().strip().split("\n")
    assert [l.split(",")[0] for l in lines[1:]] == ["0", "0.005"]  # sorted


def test_run_sweep_records_failures(tmp_path):
    edges = tmp_path / "edges.tsv"
    attrs = tmp_path / "attrs.tsv"
    edges.write_text("")  # no edges at all
    attrs.write_text("a\t0\nb\t1\n")
    cfg = ExperimentConfig(name="bad", graph=None, edges=str(edges),
                           attrs=str(attrs), method="none",
                           embedding=EmbeddingConfig(**TINY_EMBEDDING),
                           seeds=[0], out_dir=str(tmp_path / "runs"))
    summary = run_sweep(cfg)
    assert summary["completed"] == 0 and summary["failed"] == 1
    base = summary["out_dir"]
    log = open(os.path.join(base, "failures.log")).read()
    assert "seed=0" in log
    with open(os.path.join(base, "aggregate.csv")) as fh:
        assert len(fh.read().strip().split("\n")) == 1  # header only


def test_run_sweep_parallel_matches_serial(tmp_path):
    c1 = _tiny_cfg(tmp_path, out_dir=str(tmp_path / "serial"))
    c2 = _tiny_cfg(tmp_path, out_dir=str(tmp_path / "parallel"))
    run_sweep(c1, jobs=1)
    run_sweep(c2, jobs=2)
    a = open(tmp_path / "serial" / "exp" / "aggregate.csv", "rb").read()
    b = open(tmp_path / "parallel" / "exp" / "aggregate.csv", "rb").read()
    assert a == b
    with pytest.raises(ConfigError):
        run_sweep(c1, jobs=0)


def test_cli_generate_and_seed_env(tmp_path, monkeypatch, capsys):
    out1 = tmp_path / "a"
    assert main(["generate", "--graph", "G1", "--seed", "5",
                 "--out", str(out1)]) == 0
    assert "wrote 150 nodes" in capsys.readouterr().out

    ref_dir = tmp_path / "ref"
    ref_dir.mkdir()
    g = generate_sbm(builtin_spec("G1"), 5)
    write_graph_files(g, ref_dir / "edges.tsv", ref_dir / "attrs.tsv")
    assert (out1 / "edges.tsv").read_bytes() == (ref_dir / "edges.tsv").read_bytes()

    # with no --seed the CLI falls back to FAIRREPAIR_SEED
    monkeypatch.setenv("FAIRREPAIR_SEED", "5")
    out2 = tmp_path / "b"
    assert main(["generate", "--graph", "G1", "--out", str(out2)]) == 0
    assert (out2 / "edges.tsv").read_bytes() == (out1 / "edges.tsv").read_bytes()

    monkeypatch.setenv("FAIRREPAIR_SEED", "not_an_int")
    assert main(["generate", "--graph", "G1", "--out", str(tmp_path / "c")]) == 2


def test_cli_repair_builtin(tmp_path, capsys):
    out = tmp_path / "rep"
    assert main(["repair", "--graph", "G1", "--seed", "2", "--method", "emd",
                 "--out", str(out)]) == 0
    assert "added cross-group mass" in capsys.readouterr().out
    meta = json.loads((out / "repair_meta.json").read_text())
    assert meta["added_mass"] > 0
    assert meta["config"]["method"] == "emd"
    assert (out / "repaired_edges.tsv").is_file()
    assert (out / "repaired_attrs.tsv").is_file()


def test_cli_repair_errors(tmp_path, capsys):
    # random without a target mass is a usage error
    assert main(["repair", "--graph", "G1", "--method", "random",
                 "--out", str(tmp_path / "x")]) == 2
    # both graph sources
    assert main(["repair", "--graph", "G1", "--edges", "e.tsv",
                 "--attrs", "a.tsv", "--out", str(tmp_path / "x")]) == 2
    # unreadable files are a data error
    assert main(["repair", "--edges", str(tmp_path / "no.tsv"),
                 "--attrs", str(tmp_path / "no2.tsv"),
                 "--out", str(tmp_path / "x")]) == 3
    # malformed edge file
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\tnot_a_weight\n")
    attrs = tmp_path / "attrs.tsv"
    attrs.write_text("a\t0\nb\t1\n")
    assert main(["repair", "--edges", str(bad), "--attrs", str(attrs),
                 "--out", str(tmp_path / "x")]) == 3
    capsys.readouterr()


def test_cli_pipeline_runs_and_is_reproducible(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "name": "cli_exp", "graph": "G1", "method": "emd", "seeds": [0],
        "embedding": TINY_EMBEDDING,
    }))
    out1, out2 = str(tmp_path / "r1"), str(tmp_path / "r2")
    assert main(["pipeline", str(cfg_path), "--out", out1]) == 0
    assert main(["pipeline", str(cfg_path), "--out", out2]) == 0
    capsys.readouterr()
    a = open(os.path.join(out1, "cli_exp", "aggregate.csv"), "rb").read()
    b = open(os.path.join(out2, "cli_exp", "aggregate.csv"), "rb").read()
    assert a == b

    assert main(["pipeline", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "x"}))  # no graph source
    assert main(["pipeline", str(bad)]) == 2
    capsys.readouterr()


def test_cli_pipeline_failure_exit_code(tmp_path, capsys):
    edges = tmp_path / "edges.tsv"
    attrs = tmp_path / "attrs.tsv"
    edges.write_text("")
    attrs.write_text("a\t0\nb\t1\n")
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "name": "failing", "edges": str(edges), "attrs": str(attrs),
        "method": "none", "seeds": [0], "embedding": TINY_EMBEDDING,
    }))
    assert main(["pipeline", str(cfg_path), "--out", str(tmp_path / "o")]) == 4
    err = capsys.readouterr().err
    assert "FAILED" in err
