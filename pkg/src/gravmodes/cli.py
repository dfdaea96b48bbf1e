"""Command-line interface: run, verify, print-config."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import PRESETS, parse_config, preset_text, render_config_text
from .errors import GravmodesError, NumericalFailure, ParseError, StepSizeError
from .runner import run as run_scenario
from .verify import format_report, run_battery

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_config(args):
    if args.preset is not None and args.config is not None:
        raise ParseError("give either --preset or --config, not both")
    if args.preset is not None:
        text = preset_text(args.preset)
    elif args.config is not None:
        text = Path(args.config).read_text()
    else:
        raise ParseError("one of --preset or --config is required")
    return parse_config(text, overrides=args.override)


def _add_config_args(sub):
    sub.add_argument("--config", metavar="PATH", help="scenario config document")
    sub.add_argument(
        "--preset", choices=sorted(PRESETS), help="bundled scenario preset"
    )
    sub.add_argument(
        "--override",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        help="override a config entry, e.g. physics.boson_number=4 (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravmodes",
        description="Self-gravitating wavepacket evolution with exact "
        "second-quantized entanglement diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario and write artifacts")
    _add_config_args(p_run)
    p_run.add_argument("--output", metavar="DIR", help="output directory override")

    p_verify = sub.add_parser("verify", help="run the bundled oracle battery")
    p_verify.add_argument(
        "--suite",
        choices=["1d", "3d", "algebra", "all"],
        default="all",
        help="which suite to run (default all)",
    )
    p_verify.add_argument(
        "--inject-kernel-fault",
        action="store_true",
        help="perturb the gravity kernel to demonstrate oracle sensitivity",
    )

    p_print = sub.add_parser(
        "print-config", help="echo the fully resolved config document"
    )
    _add_config_args(p_print)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = _load_config(args)
            result = run_scenario(config, output_dir=args.output)
            summary = result.summary
            print(f"scenario      : {summary['scenario']} ({summary['sourcing']})")
            print(f"records       : {summary['records']} to t={summary['final_time']:g}")
            print(f"max gram drift: {summary['max_gram_drift']:.3e}")
            if summary["max_cross_block"] is not None:
                print(f"max crossblock: {summary['max_cross_block']:.3e} "
                      f"(threshold {summary['cross_block_threshold']:g})")
            print(f"min potential : {summary['min_phi']:.6g}")
            if summary["energy_drift_rel"] is not None:
                print(f"energy drift  : {summary['energy_drift_rel']:.3e}")
            if summary["max_entropy_bits"] is not None:
                print(f"max entropy   : {summary['max_entropy_bits']:.3e} bits")
            if summary["max_negativity_bits"] is not None:
                print(f"max negativity: {summary['max_negativity_bits']:.3e} bits")
            print(f"verdict       : {summary['verdict']}")
            if result.output_dir is not None:
                print(f"artifacts in  : {result.output_dir}")
            return EXIT_OK
        if args.command == "verify":
            suites = ("1d", "3d", "algebra") if args.suite == "all" else (args.suite,)
            items = run_battery(suites, inject_kernel_fault=args.inject_kernel_fault)
            print(format_report(items))
            return EXIT_OK if all(it.passed for it in items) else EXIT_FAILURE
        if args.command == "print-config":
            config = _load_config(args)
            sys.stdout.write(render_config_text(config))
            return EXIT_OK
        raise AssertionError(f"unhandled command {args.command}")
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepSizeError, NumericalFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except GravmodesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
