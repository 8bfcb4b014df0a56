"""Command-line entry point: ``gncgcp {qap,match,synthetic,awar}``.

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager

from . import bench, datasets
from .solver import NumericalError, SolverConfig

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

logger = logging.getLogger("gncgcp")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--dzeta", type=float, default=0.001, help="annealing step (default 0.001)")
    g.add_argument("--epsilon", type=float, default=0.001,
                   help="Frank-Wolfe relative gap tolerance (default 0.001)")
    g.add_argument("--max-fw-iters", type=int, default=30,
                   help="Frank-Wolfe iterations per annealing step (default 30)")
    g.add_argument("--line-search", choices=("exact", "backtracking"), default="exact")
    o = p.add_argument_group("output")
    o.add_argument("--format", choices=("csv", "json"), default="csv")
    o.add_argument("--output", "-o", help="write records here instead of stdout")
    o.add_argument("--oracle", choices=("auto", "off"), default="auto",
                   help="exhaustive optimum when the instance is small enough")


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(
            d_zeta=args.dzeta,
            epsilon=args.epsilon,
            max_fw_iters=args.max_fw_iters,
            line_search="exact_polynomial" if args.line_search == "exact" else "backtracking",
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gncgcp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("qap", help="solve QAPLIB instances")
    p.add_argument("instances", nargs="+",
                   help=f"QAPLIB .dat files or bundled names ({', '.join(datasets.bundled_instances())})")
    p.add_argument("--algorithm", default="qap", choices=bench.QAP_ALGORITHMS + ("all",))
    p.add_argument("--opt", type=float, help="known optimum (single instance only)")
    p.add_argument("--no-normalize", action="store_true",
                   help="solve on the raw matrices instead of max-abs scaled ones")
    _add_solver_flags(p)

    p = sub.add_parser("match", help="match a graph pair file (m, A_M, n, A_D)")
    p.add_argument("pairs", nargs="+")
    p.add_argument("--algorithm", default="sgm", choices=bench.GRAPH_ALGORITHMS + ("all",))
    _add_solver_flags(p)

    p = sub.add_parser("synthetic", help="run a synthetic graph-matching grid")
    p.add_argument("--family", default="all",
                   help="three-letter family code such as DBL, or 'all' (default)")
    p.add_argument("--mode", choices=("equal", "subgraph"), default="equal")
    p.add_argument("--sizes", type=_int_list, default=[8],
                   help="graph sizes (data graph size in subgraph mode), comma-separated")
    p.add_argument("--n-m", type=int, default=None, help="model size in subgraph mode")
    p.add_argument("--betas", type=_float_list, default=[0.0], help="noise levels, comma-separated")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algorithm", default="sgm", choices=bench.GRAPH_ALGORITHMS + ("all",))
    p.add_argument("--summary", help="also write per-cell aggregates (long format) here")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    _add_solver_flags(p)

    p = sub.add_parser("awar", help="average relative excess over optimum of result files")
    p.add_argument("results", nargs="+", help="CSV or JSON files written by 'qap'")
    p.add_argument("--algorithm", help="restrict to one algorithm")
    return parser


@contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _algorithms(choice: str, allowed) -> tuple[str, ...]:
    return tuple(allowed) if choice == "all" else (choice,)


def _cmd_qap(args) -> list[bench.RunRecord]:
    if args.opt is not None and len(args.instances) > 1:
        raise UsageError("--opt applies to a single instance")
    cfg = _config(args)
    records = []
    for src in args.instances:
        for alg in _algorithms(args.algorithm, bench.QAP_ALGORITHMS):
            rec = bench.run_qap(src, alg, cfg, normalize=not args.no_normalize, opt=args.opt,
                                use_oracle=args.oracle == "auto")
            logger.info("%s %s cost=%g opt=%s %.1fs", rec.problem, alg, rec.cost, rec.opt,
                        rec.wall_time)
            records.append(rec)
    return records


def _cmd_match(args) -> list[bench.RunRecord]:
    cfg = _config(args)
    records = []
    for path in args.pairs:
        pair = datasets.parse_graph_pair(path)
        for alg in _algorithms(args.algorithm, bench.GRAPH_ALGORITHMS):
            if alg == "gm" and pair.a_m.shape != pair.a_d.shape:
                if args.algorithm == "all":
                    continue
                raise UsageError(f"{path}: gm needs equal-size graphs")
            records.append(bench.run_pair(pair, alg, cfg, use_oracle=args.oracle == "auto",
                                          problem=path))
    return records


def _cmd_synthetic(args) -> list[bench.RunRecord]:
    cfg = _config(args)
    families = datasets.FAMILIES if args.family.lower() == "all" else (args.family.upper(),)
    for fam in families:
        try:
            datasets.GraphSpec.from_code(fam, 2)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    algs = _algorithms(args.algorithm, bench.GRAPH_ALGORITHMS)
    if args.mode == "subgraph":
        if algs == ("gm",):
            raise UsageError("gm needs --mode equal")
        algs = tuple(a for a in algs if a != "gm")
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    records = []
    for fam in families:
        for alg in algs:
            try:
                records += bench.run_synthetic(
                    fam, args.mode, args.sizes, args.betas, args.trials, args.seed, alg, cfg,
                    n_m=args.n_m, use_oracle=args.oracle == "auto", jobs=args.jobs)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
    if args.summary:
        fmt = "json" if args.summary.endswith(".json") else "csv"
        with _sink(args.summary) as fh:
            bench.write_rows(bench.summarize(records), fmt, fh)
    return records


def _cmd_awar(args) -> int:
    records = []
    for path in args.results:
        records += bench.read_records(path)
    if args.algorithm:
        records = [r for r in records if r.algorithm == args.algorithm]
    by_alg: dict[str, list] = {}
    for r in records:
        by_alg.setdefault(r.algorithm, []).append(r)
    if not by_alg:
        raise UsageError("no records to aggregate")
    for alg, recs in sorted(by_alg.items()):
        print(f"{alg}\t{len(recs)}\t{bench.awar(recs):.3f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "awar":
            return _cmd_awar(args)
        handler = {"qap": _cmd_qap, "match": _cmd_match, "synthetic": _cmd_synthetic}
        records = handler[args.command](args)
        with _sink(args.output) as fh:
            bench.write_records(records, args.format, fh)
    except UsageError as exc:
        print(f"gncgcp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"gncgcp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"gncgcp: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
