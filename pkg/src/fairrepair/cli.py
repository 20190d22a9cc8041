"""Command-line interface.

Subcommands:
  generate  -- sample a built-in benchmark graph and write it to disk
  repair    -- repair a graph's adjacency matrix and write the result
  pipeline  -- run a sweep described by a JSON config file

Exit codes: 0 success, 2 configuration error, 3 data error,
4 numerical failure.  The default seed is taken from ``FAIRREPAIR_SEED``
when set.
"""
from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigError, DataError, FairRepairError, NumericalError
from .graphs import BUILTIN_GRAPHS, builtin_spec, generate_sbm, read_graph_files, write_graph_files
from .pipeline import load_config, run_sweep
from .repair import RepairConfig, repair_graph

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _default_seed() -> int:
    raw = os.environ.get("FAIRREPAIR_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"FAIRREPAIR_SEED must be an integer, got {raw!r}") from None


def _add_graph_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", choices=sorted(BUILTIN_GRAPHS),
                   help="built-in benchmark to sample")
    p.add_argument("--edges", help="edge-list TSV (src<TAB>dst[<TAB>weight])")
    p.add_argument("--attrs", help="node-attribute TSV (node<TAB>label)")


def _load_input_graph(args) -> "AttributedGraph":
    if (args.graph is None) == (args.edges is None):
        raise ConfigError("specify exactly one of --graph or --edges/--attrs")
    if args.graph is not None:
        return generate_sbm(builtin_spec(args.graph), args.seed)
    if args.attrs is None:
        raise ConfigError("--edges requires --attrs")
    return read_graph_files(args.edges, args.attrs)


def cmd_generate(args) -> int:
    g = generate_sbm(builtin_spec(args.graph), args.seed)
    os.makedirs(args.out, exist_ok=True)
    write_graph_files(g, os.path.join(args.out, "edges.tsv"),
                      os.path.join(args.out, "attrs.tsv"))
    print(f"wrote {g.num_nodes} nodes / {int((g.adjacency > 0).sum() // 2)} edges "
          f"to {args.out}")
    return EXIT_OK


def cmd_repair(args) -> int:
    if args.method == "random" and args.target_mass is None:
        raise ConfigError("--method random requires --target-mass")
    g = _load_input_graph(args)
    cfg = RepairConfig(method=args.method, lam=args.lam, metric=args.metric,
                       knn_k=args.knn_k, seed=args.seed)
    result = repair_graph(g, cfg, target_mass=args.target_mass)
    os.makedirs(args.out, exist_ok=True)
    write_graph_files(result.repaired,
                      os.path.join(args.out, "repaired_edges.tsv"),
                      os.path.join(args.out, "repaired_attrs.tsv"))
    result.write_metadata(os.path.join(args.out, "repair_meta.json"))
    print(f"repaired graph written to {args.out} "
          f"(added cross-group mass {result.added_mass:.4f})")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = load_config(args.config)
    if args.out is not None:
        cfg.out_dir = args.out
    summary = run_sweep(cfg, jobs=args.jobs)
    print(f"{summary['completed']} runs completed, {summary['failed']} failed; "
          f"results in {summary['out_dir']}")
    for line in summary["failures"]:
        print("FAILED " + line, file=sys.stderr)
    if summary["failed"]:
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairrepair",
        description="Repair graph adjacency matrices with optimal transport "
                    "so node embeddings treat label groups evenly.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="sample a built-in benchmark graph")
    p_gen.add_argument("--graph", required=True, choices=sorted(BUILTIN_GRAPHS))
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=cmd_generate)

    p_rep = sub.add_parser("repair", help="repair a graph")
    _add_graph_inputs(p_rep)
    p_rep.add_argument("--method", choices=("emd", "laplacian", "random"),
                       default="emd")
    p_rep.add_argument("--lambda", dest="lam", type=float, default=0.0,
                       help="strength of the individual-fairness penalty")
    p_rep.add_argument("--metric", choices=("sqeuclidean", "hamming"),
                       default="sqeuclidean")
    p_rep.add_argument("--knn-k", type=int, default=3)
    p_rep.add_argument("--target-mass", type=float, default=None,
                       help="cross-group mass to add (random method only)")
    p_rep.add_argument("--seed", type=int, default=None)
    p_rep.add_argument("--out", required=True, help="output directory")
    p_rep.set_defaults(func=cmd_repair)

    p_pipe = sub.add_parser("pipeline", help="run a sweep from a JSON config")
    p_pipe.add_argument("config", help="path to the JSON experiment config")
    p_pipe.add_argument("--jobs", type=int, default=1,
                        help="number of concurrent runs")
    p_pipe.add_argument("--out", default=None, help="override the output root")
    p_pipe.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", None) is None and hasattr(args, "seed"):
            args.seed = _default_seed()
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FairRepairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
