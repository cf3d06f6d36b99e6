"""Command-line interface: ``lkcand {solve,candidates,analyze,bench,exact,gen}``.

Exit codes: 0 success (or solved), 1 usage error, 2 input error,
3 budget exhausted without reaching the target.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import bench
from .candidates import (Generator, alpha_candidates, missing_optimal_edges, nearest_candidates,
                         parse_candidate_file, two_opt_union, write_candidate_file)
from .exact import brute_force, held_karp_dp
from .instance import (Metric, TSPLIBError, gen_clustered, gen_random_uniform, parse_tour_file,
                       parse_tsplib, read_tour_order, write_tour_file, write_tsplib)
from .popmusic import PopmusicParams, popmusic_candidates
from .solver import Kick, Strategy, SolverConfig, solve

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_TIMEOUT = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _instance(path: str):
    return parse_tsplib(_read(path))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _popmusic_params(args) -> PopmusicParams:
    return PopmusicParams(sample_fraction=args.sample_fraction, subpath_len=args.subpath,
                          runs_for_candidates=args.runs)


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _fold(s: str) -> int:
    v = int(s)
    if not 1 <= v <= 10:
        raise argparse.ArgumentTypeError("fold must be in 1..10")
    return v


def _add_search_flags(p) -> None:
    p.add_argument("--k", type=int, default=5, help="alpha candidates per city")
    p.add_argument("--m", type=int, default=1000, help="2-opt tours for the union set")
    p.add_argument("--runs", type=int, default=10, help="POPMUSIC runs per candidate set")
    p.add_argument("--sample-fraction", type=float, default=0.1)
    p.add_argument("--subpath", type=int, default=12)
    p.add_argument("--kick", choices=[k.value for k in Kick], default=Kick.DOUBLE_BRIDGE.value)
    p.add_argument("--trials", type=int, default=None, help="trials per run (default n)")
    p.add_argument("--no-subgradient", action="store_true")
    p.add_argument("--candidate-seed", type=int, default=0)
    p.add_argument("--count-init-time", action="store_true")
    p.add_argument("--max-restarts", type=int, help="stop after this many restarts (default: budget only)")


def _config(args, strategy: str, **kw) -> SolverConfig:
    return SolverConfig(
        candidate_strategy=Strategy(strategy), k_alpha=args.k, m_two_opt_tours=args.m,
        popmusic=_popmusic_params(args), kick=Kick(args.kick), trials_per_run=args.trials,
        subgradient=not args.no_subgradient, candidate_seed=args.candidate_seed,
        count_init_time=args.count_init_time, max_restarts=args.max_restarts, **kw)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lkcand", description="Candidate-set experiments for LK-style TSP search.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one instance, print a RunRecord CSV row")
    p.add_argument("--instance", required=True)
    p.add_argument("--strategy", required=True, choices=[s.value for s in Strategy])
    p.add_argument("--fold", type=_fold, default=1)
    p.add_argument("--budget", type=_positive_float, default=60.0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--target", type=float)
    g.add_argument("--opt-tour")
    p.add_argument("--initial-tour")
    p.add_argument("--out-tour", help="write the best tour here")
    _add_search_flags(p)

    p = sub.add_parser("candidates", help="build a candidate set and write an LKH candidate file")
    p.add_argument("--instance", required=True)
    p.add_argument("--generator", required=True, choices=[g.value for g in Generator])
    p.add_argument("--k", type=int, default=5)
    p.add_argument("-m", "--m", type=int, default=1000)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--sample-fraction", type=float, default=0.1)
    p.add_argument("--subpath", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-subgradient", action="store_true")
    p.add_argument("--max-per-city", type=int)
    p.add_argument("--raw-scores", action="store_true", help="write frequencies as-is")
    p.add_argument("--out")

    p = sub.add_parser("analyze", help="count optimal-tour edges missing from a candidate file")
    p.add_argument("--candidates", required=True)
    p.add_argument("--opt-tour", required=True)

    p = sub.add_parser("bench", help="run a manifest x configs x folds matrix")
    p.add_argument("--manifest", required=True)
    p.add_argument("--configs", required=True, help="comma-separated strategies")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--cutoff", type=_positive_float, default=bench.DEFAULT_CUTOFF)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)
    _add_search_flags(p)

    p = sub.add_parser("exact", help="print an optimal tour (n <= 15)")
    p.add_argument("--instance", required=True)
    p.add_argument("--method", choices=["dp", "brute"], default="dp")
    p.add_argument("--out")

    p = sub.add_parser("gen", help="write a random instance in TSPLIB format")
    p.add_argument("--kind", required=True, choices=["uniform", "clustered"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clusters", type=int, default=5)
    p.add_argument("--spread", type=float, default=20.0)
    p.add_argument("--box", type=float, default=1000.0)
    p.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.EUC_2D_EXACT.value)
    p.add_argument("--name")
    p.add_argument("--out")
    return ap


def _cmd_solve(args) -> int:
    inst = _instance(args.instance)
    opt = None
    target = args.target
    if args.opt_tour:
        opt = parse_tour_file(_read(args.opt_tour), inst)
        target = opt.length
    initial = parse_tour_file(_read(args.initial_tour), inst) if args.initial_tour else None
    cfg = _config(args, args.strategy, fold=args.fold, time_budget=args.budget, target=target)
    rec = solve(inst, cfg, optimal=opt, initial_tour=initial)
    sys.stdout.write(bench.write_records_csv([rec]))
    if args.out_tour and rec.tour is not None:
        Path(args.out_tour).write_text(write_tour_file(rec.tour, inst.name, f"length {rec.best_length!r}"))
    if rec.solved or (target is None and inst.optimum_length is None):
        return EXIT_OK
    return EXIT_TIMEOUT


def _cmd_candidates(args) -> int:
    inst = _instance(args.instance)
    gen = Generator(args.generator)
    if gen is Generator.NEAREST:
        cand = nearest_candidates(inst, args.k)
    elif gen is Generator.ALPHA:
        cand = alpha_candidates(inst, args.k, not args.no_subgradient)
    elif gen is Generator.TWO_OPT_UNION:
        cand = two_opt_union(inst, args.m, args.seed, max_per_city=args.max_per_city)
    else:
        params = PopmusicParams(sample_fraction=args.sample_fraction, subpath_len=args.subpath,
                                runs_for_candidates=args.runs)
        cand = popmusic_candidates(inst, args.seed, params, max_per_city=args.max_per_city)
    _emit(write_candidate_file(cand, alpha_like_scores=not args.raw_scores), args.out)
    return EXIT_OK


def _cmd_analyze(args) -> int:
    cand = parse_candidate_file(_read(args.candidates))
    order = read_tour_order(_read(args.opt_tour), cand.n)
    count, edges = missing_optimal_edges(cand, order)
    lines = [f"missing: {count}"] + [f"{a + 1} {b + 1}" for a, b in edges]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_bench(args) -> int:
    try:
        entries = bench.read_manifest(args.manifest)
    except OSError as exc:
        raise InputError(f"cannot read manifest: {exc}") from None
    names = [s.strip() for s in args.configs.split(",") if s.strip()]
    if not names:
        raise InputError("no configs given")
    configs = [_config(args, Strategy(s)) for s in names]
    report = bench.run_matrix(entries, configs, range(1, args.folds + 1), args.cutoff, args.workers)
    scatter = (configs[0].name, configs[1].name) if len(configs) >= 2 else None
    for path in bench.write_report(report, args.out_dir, scatter):
        print(path)
    return EXIT_OK


def _cmd_exact(args) -> int:
    inst = _instance(args.instance)
    res = held_karp_dp(inst) if args.method == "dp" else brute_force(inst)
    _emit(write_tour_file(res.tour, f"{inst.name}.opt", f"length {res.length:.10g}"), args.out)
    return EXIT_OK


def _cmd_gen(args) -> int:
    metric = Metric(args.metric)
    if args.kind == "uniform":
        inst = gen_random_uniform(args.n, args.seed, args.box, metric)
    else:
        inst = gen_clustered(args.n, args.clusters, args.spread, args.seed, args.box, metric)
    if args.name:
        inst = dataclasses.replace(inst, name=args.name)
    _emit(write_tsplib(inst), args.out)
    return EXIT_OK


_COMMANDS = {"solve": _cmd_solve, "candidates": _cmd_candidates, "analyze": _cmd_analyze,
             "bench": _cmd_bench, "exact": _cmd_exact, "gen": _cmd_gen}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.cmd](args)
    except (InputError, TSPLIBError) as exc:
        print(f"lkcand: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        # invalid flag values that only surface once inputs are known (k >= n, n > 15, ...)
        print(f"lkcand: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
