"""Command line entry point.

Each subcommand runs one task from a JSON config::

    lidskii decompose --config jordan.json --out results/
    lidskii full-verify --config suite.json --seed 7 --threads 4

Exit status: 0 when every verification gate passes, 1 when a gate fails,
2 for input errors (nothing is written in that case).
"""
import argparse
import os
import sys

from .experiments import ConfigError, load_config, run_experiment

COMMANDS = {
    "analyze-exponent": "exponent-analysis",
    "decompose": "decompose",
    "sum": "sum",
    "contour-verify": "contour-verify",
    "evolve": "evolve",
    "full-verify": "full-verify",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="lidskii",
                                     description="Root-vector summation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=name != "full-verify",
                       help="experiment config (JSON)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="base seed (overrides the config)")
        p.add_argument("--threads", type=int,
                       help="worker count (default: LIDSKII_THREADS or 1)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    task = COMMANDS[args.command]
    overrides = {"task": task, "seed": args.seed,
                 "output": os.path.abspath(args.out) if args.out else None}
    try:
        if args.config is None:
            cfg = load_config({"name": "full-verify", "output": "out",
                               "seed": 0}, overrides)
        else:
            cfg = load_config(args.config, overrides)
        if args.threads is not None and args.threads < 1:
            raise ConfigError(["--threads must be positive"])
        result = run_experiment(cfg, threads=args.threads)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"error: {p}", file=sys.stderr)
        return 2
    failed = [k for k, g in result.manifest["gates"].items() if g["status"] != "pass"]
    print(f"{cfg.name}: {result.manifest['status']} "
          f"({len(result.manifest['gates']) - len(failed)}/{len(result.manifest['gates'])} gates)"
          f" -> {result.manifest_path}")
    for k in failed:
        print(f"  failed: {k} {result.manifest['gates'][k]['detail']}")
    return result.status


if __name__ == "__main__":
    sys.exit(main())
