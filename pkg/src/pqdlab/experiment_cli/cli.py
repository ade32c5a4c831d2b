"""Command-line entry point ``pqdlab``.

Exit codes: 0 success, 2 configuration or domain error, 3 degenerate model
or unmet precondition, 4 I/O error.
"""
from __future__ import annotations

import argparse
import sys

from .. import __version__
from ..exceptions import ConfigError, DegenerateModelError, DomainError, PreconditionError
from .config import KINDS, default_workers, dump_text, load_config, validate
from .reports import write_reports
from .runner import run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_IO = 0, 2, 3, 4

# which config key --paths and --n-max set for each experiment kind
_PATHS_KEY = {"sample": ("sample", "paths"), "slln": ("slln", "paths"), "regress": ("regress", "replicates")}
_NMAX_KEY = {"sample": ("sample", "n"), "slln": ("slln", "n_max")}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pqdlab", description="Monte Carlo lab for laws of large numbers under positive quadrant dependence.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in KINDS + ("validate",):
        p = sub.add_parser(name, help=f"run a {name} experiment" if name != "validate" else "check a config and print its normalised form")
        p.add_argument("--config", metavar="PATH", help="sectioned text or JSON config file")
        if name == "validate":
            continue
        p.add_argument("--seed", metavar="U64", type=int, help="master seed (overrides the config)")
        p.add_argument("--paths", metavar="N", type=int, help="paths (sample, slln) or replicates (regress)")
        p.add_argument("--n-max", metavar="N", type=int, dest="n_max", help="path length (sample) or largest checkpoint (slln)")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), action="append", dest="formats", help="report format; repeatable")
        p.add_argument("--workers", metavar="N", type=int, help="worker threads (default: available CPUs)")
        p.add_argument("--svg", action="store_true", default=None, help="also write an SVG plot")
    return parser


def _overrides(args):
    kind = args.command
    ov = {
        ("experiment", "master_seed"): args.seed,
        ("experiment", "out"): args.out,
        ("experiment", "formats"): args.formats,
        ("experiment", "workers"): args.workers,
        ("experiment", "svg"): args.svg,
    }
    if args.paths is not None:
        if kind not in _PATHS_KEY:
            raise ConfigError([f"--paths does not apply to {kind}"])
        ov[_PATHS_KEY[kind]] = args.paths
    if args.n_max is not None:
        if kind not in _NMAX_KEY:
            raise ConfigError([f"--n-max does not apply to {kind}"])
        ov[_NMAX_KEY[kind]] = args.n_max
    return ov


def _load(args, kind, overrides):
    if args.config:
        return load_config(args.config, kind, overrides)
    return validate({}, kind, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            cfg = _load(args, None, None)
            sys.stdout.write(dump_text(cfg))
            return EXIT_OK
        cfg = _load(args, args.command, _overrides(args))
        workers = cfg["experiment"].get("workers") or default_workers()
        files = run_experiment(cfg, workers)
        for path in write_reports(cfg["experiment"]["out"], cfg, files, __version__):
            print(path)
        return EXIT_OK
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateModelError, PreconditionError) as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
