"""
Command-line entry point.

    python main.py solve INSTANCE [--eps E] [--trials T] [--seed S] [--out PATH] [--continuous]
    python main.py exact INSTANCE [--cap N]
    python main.py baseline INSTANCE [--seed S]
    python main.py diagnose INSTANCE --check NAME [--seeds N] [--eps E]
    python main.py gen --n N --m M --k K --d D --z Z [--seed S] [--dist uniform|clustered] [--continuous]
    python main.py bench [--sizes 200,400] [--runs R]

Results go to stdout (or --out); logs go to stderr.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import Dict, List, Optional, Sequence, Type

from pydantic import ValidationError

from conf import settings
from core.logging_config import get_logger, setup_logging
from exceptions import (
    DegenerateInstanceError,
    DomainError,
    ImproperlyConfigured,
    InfeasibleError,
    InternalAssertionError,
    KClusterError,
    ParameterError,
    ParseError,
    SizeLimitError,
    StructuralError,
)
from reporting import export_csv, export_json, export_markdown, summarise_bench
from schemas.instance import Instance
from schemas.params import BaselineParams, SolverParams
from services.baseline import baseline_solve
from services.diagnostics import ROW_FIELDS, SUMMARY_FIELDS, run_check, seed_range
from services.geometry import cost, generate_candidates
from services.oracle import brute_force_opt
from services.pipeline import solve
from utils.files import read_text, write_text
from utils.formats import parse_instance, render_instance, render_solution
from utils.generator import DISTRIBUTIONS, generate_instance
from utils.rng import derive_seed

logger = get_logger(__name__)

EXIT_CODES: Dict[Type[Exception], int] = {
    ParameterError: 1,
    ParseError: 1,
    StructuralError: 1,
    DomainError: 1,
    DegenerateInstanceError: 1,
    ImproperlyConfigured: 1,
    SizeLimitError: 2,
    InfeasibleError: 2,
    InternalAssertionError: 3,
}

BENCH_FIELDS = ["size", "run", "seconds", "cost"]
BENCH_SUMMARY_FIELDS = [
    "size", "runs", "median_seconds", "p95_seconds", "std_seconds", "median_cost", "time_ratio",
]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise ParameterError("arguments", message)


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        write_text(path, text)
    else:
        sys.stdout.write(text)


def _load(path: str):
    text = sys.stdin.read() if path == "-" else read_text(path)
    return parse_instance(text)


def _sizes(value: str) -> List[int]:
    try:
        sizes = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise ParameterError("sizes", f"expected comma-separated integers, got {value!r}") from None
    if not sizes or min(sizes) < 1:
        raise ParameterError("sizes", "need at least one positive size")
    return sizes


def _discretise(instance: Instance, eps: float) -> Instance:
    candidates = generate_candidates(instance.clients, eps)
    logger.info(f"continuous: {len(candidates)} candidates generated from {instance.n} clients")
    return instance.with_candidates(candidates)


def cmd_solve(args: argparse.Namespace) -> int:
    instance = _load(args.instance)
    eps = args.eps if args.eps is not None else settings.DEFAULT_EPS
    if args.continuous:
        instance = _discretise(instance, eps)
        if args.candidates:
            write_text(args.candidates, render_instance(instance, "continuous candidates"))
    elif args.candidates:
        raise ParameterError("candidates", "only written with --continuous")
    params = SolverParams(
        eps=eps,
        trials=args.trials if args.trials is not None else settings.DEFAULT_TRIALS,
        rng_seed=args.seed if args.seed is not None else settings.DEFAULT_SEED,
        threads=args.threads or settings.KCLUST_THREADS,
    )
    solution, report = solve(instance, params)
    _emit(render_solution(solution, report.cost), args.out)
    if args.report:
        export_json(args.report, report.model_dump())
    return 0


def cmd_exact(args: argparse.Namespace) -> int:
    instance = _load(args.instance)
    solution, value = brute_force_opt(instance, cap=args.cap)
    _emit(render_solution(solution, value), args.out)
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    instance = _load(args.instance)
    seed = args.seed if args.seed is not None else settings.DEFAULT_SEED
    solution = baseline_solve(instance, BaselineParams(), derive_seed(seed, 1))
    _emit(render_solution(solution, cost(instance, solution)), args.out)
    return 0


def cmd_diagnose(args: argparse.Namespace) -> int:
    instance = _load(args.instance)
    seeds = seed_range(args.seeds, start=args.seed)
    rows, summary = run_check(
        args.check, instance, args.eps, seeds, z=args.z, threads=args.threads
    )
    if args.out:
        export_csv(args.out, rows, ROW_FIELDS)
    if args.json:
        export_json(args.json, {"rows": rows, "summary": summary})
    if args.markdown:
        export_markdown(args.markdown, f"diagnose {args.check}", summary, SUMMARY_FIELDS)
    _emit(export_csv(None, summary, SUMMARY_FIELDS), args.summary)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    if args.m is None and not args.continuous:
        raise ParameterError("m", "required unless --continuous")
    m = args.m if args.m is not None else args.k
    instance = generate_instance(args.n, m, args.k, args.d, args.z, args.seed, args.dist)
    comment = (
        f"gen n={args.n} m={m} k={args.k} d={args.d} z={args.z} "
        f"seed={args.seed} dist={args.dist}"
    )
    if args.continuous:
        instance = _discretise(instance, args.eps)
        comment += f" continuous eps={args.eps}"
    _emit(render_instance(instance, comment), args.out)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    rows = []
    for size in _sizes(args.sizes):
        m = args.m or max(args.k, size // 4)
        instance = generate_instance(size, m, args.k, args.d, args.z, args.seed, args.dist)
        params = SolverParams(
            eps=args.eps, trials=args.trials, rng_seed=args.seed,
            threads=args.threads or settings.KCLUST_THREADS,
        )
        for run in range(args.runs):
            started = time.perf_counter()
            _, report = solve(instance, params)
            seconds = time.perf_counter() - started
            rows.append({"size": size, "run": run, "seconds": seconds, "cost": report.cost})
            logger.info(f"bench n={size} run {run}: {seconds:.3f}s")
    if args.out:
        export_csv(args.out, rows, BENCH_FIELDS)
    _emit(export_csv(None, summarise_bench(rows), BENCH_SUMMARY_FIELDS), args.summary)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kclust", description="Discrete Euclidean k-median / k-means")
    parser.add_argument("--log-level", default=None, help="Log level on stderr")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("solve", help="Approximation scheme")
    p.add_argument("instance")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None, help="JSON solve report")
    p.add_argument(
        "--continuous", action="store_true",
        help="Ignore the file's candidates and generate them from the clients",
    )
    p.add_argument("--candidates", default=None, help="With --continuous, write the discretised instance")
    p.set_defaults(handler=cmd_solve)

    p = commands.add_parser("exact", help="Brute-force optimum")
    p.add_argument("instance")
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_exact)

    p = commands.add_parser("baseline", help="Constant-factor baseline")
    p.add_argument("instance")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_baseline)

    p = commands.add_parser("diagnose", help="Seed-sweep diagnostics")
    p.add_argument("instance")
    p.add_argument("--check", required=True, choices=["cutprob", "badcut", "budget", "smalldist", "detour"])
    p.add_argument("--seeds", type=int, default=settings.MONTE_CARLO_MIN_SEEDS)
    p.add_argument("--seed", type=int, default=0, help="First seed")
    p.add_argument("--eps", type=float, default=settings.DEFAULT_EPS)
    p.add_argument("--z", type=int, choices=[1, 2], default=None)
    p.add_argument("--out", default=None, help="Per-seed rows CSV")
    p.add_argument("--summary", default=None, help="Summary CSV (stdout by default)")
    p.add_argument("--json", default=None)
    p.add_argument("--markdown", default=None)
    p.set_defaults(handler=cmd_diagnose)

    p = commands.add_parser("gen", help="Random instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--z", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--continuous", action="store_true", help="Candidates generated from the clients")
    p.add_argument("--eps", type=float, default=settings.DEFAULT_EPS, help="Grid accuracy of --continuous")
    p.add_argument("--dist", choices=DISTRIBUTIONS, default="uniform")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_gen)

    p = commands.add_parser("bench", help="Timing over instance sizes")
    p.add_argument("--sizes", default="200,400")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--z", type=int, default=2)
    p.add_argument("--eps", type=float, default=settings.DEFAULT_EPS)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dist", choices=DISTRIBUTIONS, default="uniform")
    p.add_argument("--out", default=None, help="Per-run rows CSV")
    p.add_argument("--summary", default=None, help="Summary CSV (stdout by default)")
    p.set_defaults(handler=cmd_bench)
    return parser


def exit_code(exc: BaseException) -> int:
    for kind in type(exc).__mro__:
        if kind in EXIT_CODES:
            return EXIT_CODES[kind]
    if isinstance(exc, (ValidationError, KClusterError)):
        return 1
    return 3


def run_command(argv: Sequence[str]) -> int:
    """
    Run one subcommand; returns the process exit code (0 success, 1 bad
    parameters or input, 2 size cap or infeasible, 3 internal error).
    """
    try:
        args = build_parser().parse_args(list(argv))
        if args.log_level:
            setup_logging(args.log_level.upper(), force=True)
        return args.handler(args)
    except Exception as exc:
        code = exit_code(exc)
        if code == 3:
            logger.exception(f"internal error: {exc}")
        else:
            logger.error(str(exc))
        return code


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
