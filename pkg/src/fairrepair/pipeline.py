"""Experiment orchestration: configs, single runs, seed x lambda sweeps.

A sweep evaluates every (lambda, seed) cell of a grid, writes one JSON
report per cell under ``<out>/<name>/<seed>/``, and aggregates the cells
into deterministic CSV files (byte-identical across repeat invocations
with the same config).
"""
from __future__ import annotations

import concurrent.futures
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .embedding import EmbeddingConfig, embed_graph
from .errors import ConfigError, DataError, FairRepairError
from .graphs import AttributedGraph, assortativity, builtin_spec, generate_sbm, read_graph_files
from .metrics import FairnessReport, consistency, di_ber, representation_bias
from .predict import hadamard_features, link_prediction_pipeline
from .repair import RepairConfig

__all__ = ["ExperimentConfig", "run_single", "run_sweep", "load_config",
           "AGGREGATE_FIELDS"]

AGGREGATE_FIELDS = ("di_xor", "consistency", "link_auc",
                    "representation_bias", "assortativity", "added_mass")


@dataclass
class ExperimentConfig:
    """Declarative description of one sweep."""

    name: str
    graph: str | None = None            # builtin name (G1..G5) ...
    edges: str | None = None            # ... or an edge/attribute file pair
    attrs: str | None = None
    method: str = "emd"                 # emd | laplacian | random | none
    lambdas: list[float] = field(default_factory=lambda: [0.0])
    metric: str = "sqeuclidean"
    knn_k: int = 3
    target_mass: float | None = None    # only for method == "random"
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    embed_method: str = "skipgram"
    test_fraction: float = 0.2
    seeds: list[int] = field(default_factory=lambda: [0])
    out_dir: str = "runs"

    def __post_init__(self) -> None:
        if not self.name or any(c in self.name for c in "/\\"):
            raise ConfigError(f"invalid experiment name {self.name!r}")
        if (self.graph is None) == (self.edges is None):
            raise ConfigError("specify exactly one of 'graph' or 'edges'+'attrs'")
        if self.edges is not None and self.attrs is None:
            raise ConfigError("'edges' requires 'attrs'")
        if self.method not in ("emd", "laplacian", "random", "none"):
            raise ConfigError(f"unknown repair method {self.method!r}")
        if self.method == "random" and self.target_mass is None:
            raise ConfigError("method 'random' requires 'target_mass'")
        if not self.lambdas:
            raise ConfigError("'lambdas' must be non-empty")
        if self.method in ("emd", "random", "none") and any(l != 0 for l in self.lambdas):
            raise ConfigError(f"method {self.method!r} requires lambdas == [0]")
        if not self.seeds:
            raise ConfigError("'seeds' must be non-empty")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in (0, 1)")


def load_config(path) -> ExperimentConfig:
    """Parse a JSON config file into an ExperimentConfig."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    emb_raw = raw.pop("embedding", {})
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        emb = EmbeddingConfig(**emb_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad embedding config: {exc}") from None
    try:
        return ExperimentConfig(embedding=emb, **raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _load_graph(cfg: ExperimentConfig, seed: int) -> AttributedGraph:
    if cfg.graph is not None:
        try:
            spec = builtin_spec(cfg.graph)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        return generate_sbm(spec, seed)
    return read_graph_files(cfg.edges, cfg.attrs)


def run_single(cfg: ExperimentConfig, lam: float, seed: int) -> FairnessReport:
    """One (lambda, seed) cell: build graph, repair, embed, score, measure."""
    g = _load_graph(cfg, seed)
    repair_cfg = None
    if cfg.method != "none":
        method = cfg.method
        if method == "laplacian" and lam == 0:
            method = "emd"  # identical objective; skip the no-op FW loop
        repair_cfg = RepairConfig(method=method, lam=lam, metric=cfg.metric,
                                  knn_k=cfg.knn_k, seed=seed)
    emb_cfg = EmbeddingConfig(**{**cfg.embedding.__dict__, "seed": seed})
    result = link_prediction_pipeline(
        g, repair_cfg, emb_cfg,
        test_fraction=cfg.test_fraction,
        seed=seed,
        embed_method=cfg.embed_method,
        random_target_mass=cfg.target_mass,
    )
    pred = (result.scores >= 0.5).astype(int)
    pairs = result.split.test_pairs
    rates = di_ber(pred, g.labels[pairs[:, 0]], g.labels[pairs[:, 1]])
    feats = hadamard_features(result.embedding, pairs)
    k = min(10, max(1, pairs.shape[0] - 1))
    return FairnessReport(
        di_xor=rates.di_xor,
        di_s=rates.di_s,
        ber_xor=rates.ber_xor,
        p1=rates.p1,
        p0=rates.p0,
        consistency=consistency(result.scores, feats, k=k),
        representation_bias=representation_bias(result.embedding.vectors,
                                                g.labels, seed=seed),
        assortativity=assortativity(result.graph.adjacency, g.labels),
        link_auc=result.test_auc,
        added_mass=result.repair.added_mass if result.repair else 0.0,
    )


def _run_cell(args) -> tuple[float, int, FairnessReport | None, str | None]:
    cfg, lam, seed = args
    try:
        return lam, seed, run_single(cfg, lam, seed), None
    except FairRepairError as exc:
        return lam, seed, None, f"{type(exc).__name__}: {exc}"
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return lam, seed, None, f"{type(exc).__name__}: {exc}"


def _lambda_tag(lam: float) -> str:
    return f"lambda_{lam:g}"


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Run all cells, write reports + aggregates, return a summary dict."""
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    base = os.path.join(cfg.out_dir, cfg.name)
    os.makedirs(base, exist_ok=True)
    cells = [(cfg, lam, seed) for lam in cfg.lambdas for seed in cfg.seeds]

    if jobs == 1:
        outcomes = [_run_cell(c) for c in cells]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell, cells))

    results: dict[tuple[float, int], FairnessReport] = {}
    failures: list[str] = []
    for lam, seed, report, err in outcomes:
        if err is not None:
            failures.append(f"lambda={lam:g} seed={seed}: {err}")
            continue
        results[(lam, seed)] = report
        run_dir = os.path.join(base, str(seed))
        os.makedirs(run_dir, exist_ok=True)
        report.to_json(os.path.join(run_dir, _lambda_tag(lam) + ".json"))

    with open(os.path.join(base, "config.json"), "w") as fh:
        snapshot = {k: v for k, v in cfg.__dict__.items() if k != "embedding"}
        snapshot["embedding"] = cfg.embedding.__dict__
        json.dump(snapshot, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(base, "failures.log"), "w") as fh:
        for line in failures:
            fh.write(line + "\n")

    _write_aggregates(base, cfg, results)
    return {"completed": len(results), "failed": len(failures),
            "out_dir": base, "failures": failures}


def _write_aggregates(base: str, cfg: ExperimentConfig,
                      results: dict[tuple[float, int], FairnessReport]) -> None:
    agg_path = os.path.join(base, "aggregate.csv")
    plot_path = os.path.join(base, "plot_data.csv")
    header = ["lambda"]
    for f in AGGREGATE_FIELDS:
        header += [f + "_mean", f + "_std"]
    agg_lines = [",".join(header)]
    plot_lines = ["lambda,DI,Cons,AUC,RB,assortativity"]
    for lam in sorted(set(cfg.lambdas)):
        reports = [results[(lam, s)] for s in cfg.seeds if (lam, s) in results]
        if not reports:
            continue
        cells = [f"{lam:.10g}"]
        means = {}
        for f in AGGREGATE_FIELDS:
            vals = np.array([getattr(r, f) for r in reports], dtype=float)
            means[f] = float(np.mean(vals))
            cells += [f"{np.mean(vals):.10g}", f"{np.std(vals):.10g}"]
        agg_lines.append(",".join(cells))
        plot_lines.append(",".join([f"{lam:.10g}"] + [
            f"{means[f]:.10g}" for f in ("di_xor", "consistency", "link_auc",
                                         "representation_bias", "assortativity")]))
    with open(agg_path, "w") as fh:
        fh.write("\n".join(agg_lines) + "\n")
    with open(plot_path, "w") as fh:
        fh.write("\n".join(plot_lines) + "\n")
