"""Command-line front end.

Exit codes: 0 on success, 2 when a verification check fails, 1 for usage
and I/O errors.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import bench, generators, reference
from .graph import GraphFormatError, GraphValidationError, load_graph, store_graph
from .solver import SolverConfig

EXIT_OK, EXIT_ERROR, EXIT_VERIFY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for verification failures
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _workers(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("EIC_WORKERS")
    if env is None:
        return 1
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"EIC_WORKERS must be an integer, got {env!r}") from None


def _config(args) -> SolverConfig:
    return SolverConfig(workers=_workers(args.workers))


def _write(path: str | None, data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.write(data.decode())
    else:
        Path(path).write_bytes(data)


def _graph_id(path: str) -> str:
    return Path(path).stem


# ---------------------------------------------------------------------------
# Subcommands


def cmd_generate(args) -> int:
    spec = generators.GenSpec(args.kind, args.scale, args.edge_factor, args.seed, *args.probs)
    g = generators.generate(spec)
    store_graph(g, args.out, args.format)
    print(f"wrote {args.out}: {g.vertex_count} vertices, {g.edge_count} edges")
    return EXIT_OK


def cmd_transform(args) -> int:
    g = load_graph(args.input)
    if args.power is not None:
        out = generators.discretize_weights(g, args.power)
    else:
        out = generators.converge_weights(g, args.pivot)
    store_graph(out, args.out, args.format)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    g = load_graph(args.graph)
    config = _config(args)
    reports, _ = bench.run_trials(
        g, args.algo, config=config, verify=args.verify, graph_id=_graph_id(args.graph),
        delta=args.delta, sources=[args.source], keep_dist=(kept := []),
    )
    r = reports[0]
    for c in bench.COLUMNS:
        print(f"{c}={bench._fmt(c, getattr(r, c))}")
    if args.dist_out:
        np.save(args.dist_out, kept[0])
    return EXIT_OK


def cmd_bench(args) -> int:
    g = load_graph(args.graph)
    reports, _ = bench.run_trials(
        g, args.algo, args.trials, args.seed, _config(args),
        verify=args.verify, graph_id=_graph_id(args.graph), delta=args.delta,
    )
    meta = bench.csv_metadata(g, seed=args.seed, algorithm=args.algo)
    _write(args.out, bench.emit_csv(reports, meta))
    return EXIT_OK


def cmd_compare(args) -> int:
    g = load_graph(args.graph)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    cmp = bench.compare(
        g, algos, args.trials, args.seed, _config(args),
        graph_id=_graph_id(args.graph), delta=args.delta,
    )
    meta = bench.csv_metadata(g, seed=args.seed)
    _write(args.out, bench.emit_comparison(cmp, meta))
    return EXIT_OK


def cmd_analyze_nlt(args) -> int:
    g = load_graph(args.graph)
    true_dist = reference.dijkstra(g, args.source).dist
    t0 = time.perf_counter()
    chain = reference.threshold_chain(g, args.source, true_dist)
    for a, b in zip(chain, chain[1:]):
        print(f"{a:.17g} -> {b:.17g}" if math.isfinite(b) else f"{a:.17g} -> inf")
    print(f"# {len(chain) - 1} pairs in {time.perf_counter() - t0:.3f}s", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True)
    p.add_argument("--algo", default="eic", choices=sorted(bench.ALGORITHMS))
    p.add_argument("--delta", type=float, default=None, help="Delta-stepping bucket width (default 0.1 * max weight)")
    p.add_argument("--workers", type=int, default=None, help="solver threads (falls back to $EIC_WORKERS, then 1)")
    p.add_argument("--verify", action="store_true", help="check every distance array against Dijkstra")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eic-sssp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic graph")
    p.add_argument("--kind", choices=generators.KINDS, default="rmat")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--edge-factor", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probs", type=float, nargs=4, metavar=("A", "B", "C", "D"), default=(0.57, 0.19, 0.19, 0.05))
    p.add_argument("--format", choices=("binary", "text"), default="binary")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("transform", help="rewrite edge weights")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--power", type=int)
    group.add_argument("--pivot", type=float)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=("binary", "text"), default="binary")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("solve", help="solve from one source")
    _add_solver_args(p)
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--dist-out", help="save the distance array as .npy")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run trials from sampled sources and write CSV")
    _add_solver_args(p)
    p.add_argument("--trials", type=int, default=bench.DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("compare", help="run several algorithms on the same sources")
    p.add_argument("--graph", required=True)
    p.add_argument("--algos", required=True, help="comma-separated, e.g. eic,delta,dijkstra")
    p.add_argument("--trials", type=int, default=bench.DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("analyze-nlt", help="print the threshold chain t -> nlt(t)")
    p.add_argument("--graph", required=True)
    p.add_argument("--source", type=int, required=True)
    p.set_defaults(func=cmd_analyze_nlt)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return args.func(args)
    except bench.VerificationError as e:
        print(f"verification failed: {e}", file=sys.stderr)
        return EXIT_VERIFY
    except (UsageError, GraphFormatError, GraphValidationError, ValueError, OSError) as e:
        print(str(e), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
