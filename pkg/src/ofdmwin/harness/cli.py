"""Command-line entry point: ``ofdmwin <subcommand> [options]``."""

import argparse
import sys

from .. import kernels
from .config import METHODS, ConfigError, load_file, make_config, parse_overrides
from .output import EmptyResultError, emit_results
from .runner import run
from .selftest import run_selftest

SUBCOMMANDS = {
    "ser-sweep": "ser_sweep",
    "learning-curve": "learning_curve",
    "tracking": "tracking",
}


def _add_common(p, with_output=True):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one configuration key (repeatable)")
    p.add_argument("--paper-scale", action="store_true", help="use the long full-length run settings")
    p.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    if with_output:
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--plot-data", help="also write a thinned per-block CSV here")


def build_parser():
    parser = argparse.ArgumentParser(prog="ofdmwin", description="Receiver window design experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        _add_common(sub.add_parser(name, help=f"run the {name} scenario"))
    v = sub.add_parser("validate-config", help="check a configuration and print the resolved values")
    v.add_argument("--scenario", default="ser_sweep", choices=sorted(SUBCOMMANDS.values()))
    _add_common(v, with_output=False)
    s = sub.add_parser("selftest", help="run the numerical self-checks")
    s.add_argument("--seed", type=int, default=0)
    return parser


def resolve_config(args, scenario):
    file_values = load_file(args.config) if args.config else {}
    overrides = parse_overrides(args.overrides)
    explicit = {"seed": args.seed}
    if args.methods:
        explicit["methods"] = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    return make_config(scenario, file_values, overrides, args.paper_scale, **explicit)


def _selftest(seed):
    results = run_selftest(seed)
    print(f"backend: {kernels.BACKEND}")
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return _selftest(args.seed)
        if args.command == "validate-config":
            cfg = resolve_config(args, args.scenario)
            for key, value in cfg.as_items():
                print(f"{key} = {value}")
            return 0
        cfg = resolve_config(args, SUBCOMMANDS[args.command])
        emit_results(run(cfg), args.out, args.plot_data)
        return 0
    except (ConfigError, EmptyResultError) as exc:
        print(f"ofdmwin: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"ofdmwin: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
