"""Command-line entry points: ``train``, ``toy`` and ``sweep``."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, coerce, load_config, read_kv_file
from .envs import LayoutError
from .metrics import TOY_HEADER, CsvSink, emit_metrics
from .toy import TOY_POLICIES, run_toy, toy_rows
from .train import train

log = logging.getLogger("megalab")


def run_training(config, out) -> None:
    with CsvSink(out) as sink:
        emit_metrics(train(config), sink)


def cmd_train(args) -> None:
    config = load_config(
        args.config, env=args.env, strategy=args.strategy, seed=args.seed, total_steps=args.steps
    )
    log.info("training %s on %s, seed %d, %d steps", config.strategy, config.env, config.seed, config.total_steps)
    run_training(config, args.out)


def cmd_toy(args) -> None:
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    unknown = set(policies) - set(TOY_POLICIES)
    if unknown:
        raise ConfigError(f"unknown toy policies: {', '.join(sorted(unknown))}")
    with CsvSink(args.out, header=TOY_HEADER) as sink:
        curves = run_toy(args.n, policies, args.iterations, args.trials, args.seed)
        emit_metrics(toy_rows(curves), sink)


def _sweep_job(job) -> str:
    config, out = job
    run_training(config, out)
    return str(out)


def sweep_jobs(path) -> tuple[list, int]:
    """Expand a sweep file into (config, output path) jobs and a worker count.

    Sweep keys: ``strategies`` and ``seeds`` (comma lists), ``out_dir``,
    ``workers``; every other key is a run-config override.
    """
    raw = read_kv_file(path)
    strategies = [s.strip() for s in raw.pop("strategies", "mega").split(",") if s.strip()]
    seeds = [int(s) for s in raw.pop("seeds", "0").split(",") if s.strip()]
    out_dir = Path(raw.pop("out_dir", "runs"))
    workers = coerce(raw.pop("workers", "1"), 1)
    jobs = []
    for strategy in strategies:
        for seed in seeds:
            config = load_config(None, **{**raw, "strategy": strategy, "seed": str(seed)})
            jobs.append((config, out_dir / f"{config.env}_{strategy}_seed{seed}.csv"))
    return jobs, workers


def cmd_sweep(args) -> None:
    jobs, workers = sweep_jobs(args.config)
    if workers <= 1:
        for job in jobs:
            log.info("wrote %s", _sweep_job(job))
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for out in pool.map(_sweep_job, jobs):
            log.info("wrote %s", out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="megalab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one agent and write its metric CSV")
    p.add_argument("--env")
    p.add_argument("--strategy")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="key = value file; CLI flags take precedence")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("toy", help="run the goal-chain entropy experiment")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--policies", default=",".join(("mega", "eg-oracle", "diverse", "achieved")))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("sweep", help="run a strategy x seed grid")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (ConfigError, LayoutError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
