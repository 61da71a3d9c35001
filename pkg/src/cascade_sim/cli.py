"""Command-line front end.

Subcommands:

    run                  one reconciliation session, one summary line
    sweep-qber           error-rate grid -> records file
    sweep-length         frame-length grid -> records file
    compare-aggregation  paired batching-off/on runs -> records file

Session policy flags are shared by all subcommands and may also be given
in a JSON config file (``--config``); explicit flags win over the file,
which wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from typing import List, Optional

from .bitframe import Bsc, FixedErrors
from .channel import write_transcript
from .errors import ConfigurationError, DecodeError, ProtocolError, TransportError
from .harness import (
    LengthSweep,
    QberSweep,
    SessionTemplate,
    compare_aggregation,
    export_records,
    run_trial_detailed,
    sweep_length,
    sweep_qber,
)
from .schedule import FixedRoundsBreak, QuietRoundsBreak, ThresholdBreak


def _parse_break(text: str):
    kind, _, value = text.partition(":")
    if not value:
        raise ConfigurationError(
            f"break condition {text!r} must look like fixed:4, quiet:2 or threshold:1"
        )
    try:
        number = int(value)
    except ValueError:
        raise ConfigurationError(f"break condition parameter must be an integer: {text!r}")
    if kind == "fixed":
        return FixedRoundsBreak(number)
    if kind == "quiet":
        return QuietRoundsBreak(number)
    if kind == "threshold":
        return ThresholdBreak(number)
    raise ConfigurationError(f"unknown break condition kind: {kind!r}")


def _add_template_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--schedule",
        choices=("static", "dynamic"),
        default="static",
        help="block-size schedule: geometric growth or corrections-adaptive",
    )
    parser.add_argument(
        "--growth-factor",
        type=int,
        default=2,
        help="growth factor for the static schedule (default 2)",
    )
    parser.add_argument(
        "--qber-estimate",
        type=float,
        default=None,
        help="error-rate estimate for block sizing (default: the true rate)",
    )
    parser.add_argument(
        "--break",
        dest="break_spec",
        default="fixed:4",
        help="termination rule: fixed:N rounds, quiet:N silent rounds, threshold:N corrections",
    )
    parser.add_argument(
        "--permutation",
        choices=("shuffle", "lcg"),
        default="lcg",
        help="round permutation family",
    )
    parser.add_argument(
        "--aggregation",
        choices=("on", "off"),
        default="off",
        help="batch a wave's parity queries into one message per round",
    )
    parser.add_argument(
        "--parity-reuse",
        choices=("on", "off"),
        default="on",
        help="serve search steps from already-known parities when possible",
    )
    parser.add_argument("--config", default=None, help="JSON file with defaults for these flags")


def _template_from_args(args: argparse.Namespace) -> SessionTemplate:
    return SessionTemplate(
        schedule_variant=args.schedule,
        growth_factor=args.growth_factor,
        break_condition=_parse_break(args.break_spec),
        permutation_kind=args.permutation,
        aggregation=args.aggregation == "on",
        parity_reuse=args.parity_reuse == "on",
        qber_estimate=args.qber_estimate,
    )


def _apply_config_file(parser: argparse.ArgumentParser, argv: List[str]) -> None:
    """Fold --config file values in as parser defaults before parsing."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if known.config is None:
        return
    try:
        with open(known.config) as handle:
            loaded = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config file {known.config!r}: {exc}")
    if not isinstance(loaded, dict):
        raise ConfigurationError("config file must hold a JSON object")
    subparsers = [
        sub
        for action in parser._actions
        if isinstance(action, argparse._SubParsersAction)
        for sub in action.choices.values()
    ]
    by_dest = {}
    for sub in subparsers:
        for action in sub._actions:
            by_dest.setdefault(action.dest, action)
    mapped = {}
    for key, value in loaded.items():
        dest = key.replace("-", "_")
        if dest == "break":
            dest = "break_spec"
        if dest not in by_dest:
            raise ConfigurationError(f"unknown config file key: {key!r}")
        action = by_dest[dest]
        if isinstance(value, str) and action.type is not None:
            value = action.type(value)
        mapped[dest] = value
    # Defaults live on the subcommand parsers, so the file has to be folded
    # into each of them; explicit flags still win at parse time.
    for sub in subparsers:
        dests = {action.dest for action in sub._actions}
        sub.set_defaults(**{k: v for k, v in mapped.items() if k in dests})


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascade-sim",
        description="Interactive-reconciliation simulator for noisy shared bit frames.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="run one session and print a summary line")
    run_parser.add_argument("--length", type=int, default=4096, help="frame length in bits")
    run_parser.add_argument("--qber", type=float, default=0.02, help="channel flip probability")
    run_parser.add_argument(
        "--errors", type=int, default=None, help="inject exactly N errors instead of --qber"
    )
    run_parser.add_argument("--seed", type=int, default=1, help="trial seed")
    run_parser.add_argument(
        "--scheduling",
        choices=("lockstep", "threaded"),
        default="lockstep",
        help="drive both parties on one thread or on two",
    )
    run_parser.add_argument("--transcript", default=None, help="write the wire transcript here")
    run_parser.add_argument("--out", default=None, help="append the trial record to this file")
    run_parser.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    _add_template_flags(run_parser)

    qber_parser = sub.add_parser("sweep-qber", help="sweep the channel error rate")
    qber_parser.add_argument("--length", type=int, default=4096)
    qber_parser.add_argument("--start", type=float, default=0.005)
    qber_parser.add_argument("--step", type=float, default=0.005)
    qber_parser.add_argument("--steps", type=int, default=60)
    qber_parser.add_argument("--repeats", type=int, default=3)
    qber_parser.add_argument("--base-seed", type=int, default=1)
    qber_parser.add_argument("--workers", type=int, default=1)
    qber_parser.add_argument("--out", required=True, help="records file to write")
    qber_parser.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    _add_template_flags(qber_parser)

    length_parser = sub.add_parser("sweep-length", help="sweep the frame length")
    length_parser.add_argument("--start", type=int, default=512)
    length_parser.add_argument("--step", type=int, default=512)
    length_parser.add_argument("--stop", type=int, default=20480)
    length_parser.add_argument("--errors", type=int, default=10)
    length_parser.add_argument("--repeats", type=int, default=3)
    length_parser.add_argument("--base-seed", type=int, default=1)
    length_parser.add_argument("--workers", type=int, default=1)
    length_parser.add_argument("--out", required=True, help="records file to write")
    length_parser.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    _add_template_flags(length_parser)

    cmp_parser = sub.add_parser(
        "compare-aggregation", help="paired runs with query batching off and on"
    )
    cmp_parser.add_argument("--start", type=int, default=512)
    cmp_parser.add_argument("--step", type=int, default=512)
    cmp_parser.add_argument("--stop", type=int, default=20480)
    cmp_parser.add_argument("--errors", type=int, default=10)
    cmp_parser.add_argument("--repeats", type=int, default=3)
    cmp_parser.add_argument("--base-seed", type=int, default=1)
    cmp_parser.add_argument("--workers", type=int, default=1)
    cmp_parser.add_argument("--out", default=None, help="write batched-run records here")
    cmp_parser.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    _add_template_flags(cmp_parser)

    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    template = _template_from_args(args)
    noise = FixedErrors(args.errors) if args.errors is not None else Bsc(args.qber)
    detail = run_trial_detailed(
        template,
        args.length,
        noise,
        args.seed,
        scenario_id="cli-run",
        scheduling=args.scheduling,
    )
    record = detail.record
    if args.transcript:
        write_transcript(args.transcript, detail.result.channel.transcript)
    if args.out:
        export_records([record], args.out, args.format)
    print(
        "status={} rounds={} corrected={} residual={} parity_bits={} "
        "parity_fraction={:.4f} messages={} wall={:.3f}s".format(
            "success" if record.success else "failure",
            record.rounds_executed,
            record.corrected_errors,
            record.residual_errors,
            record.parity_bits_disclosed,
            record.parity_fraction,
            record.messages_sent,
            record.wall_time,
        )
    )
    return 0 if record.success else 1


def _cmd_sweep_qber(args: argparse.Namespace) -> int:
    template = _template_from_args(args)
    sweep = QberSweep(args.start, args.step, args.steps, args.length, args.repeats)
    records = sweep_qber(template, sweep, base_seed=args.base_seed, workers=args.workers)
    export_records(records, args.out, args.format)
    successes = sum(1 for r in records if r.success)
    print(f"wrote {len(records)} records to {args.out} ({successes} successful)")
    return 0


def _cmd_sweep_length(args: argparse.Namespace) -> int:
    template = _template_from_args(args)
    sweep = LengthSweep(args.start, args.step, args.stop, args.errors, args.repeats)
    records = sweep_length(template, sweep, base_seed=args.base_seed, workers=args.workers)
    export_records(records, args.out, args.format)
    successes = sum(1 for r in records if r.success)
    print(f"wrote {len(records)} records to {args.out} ({successes} successful)")
    return 0


def _cmd_compare_aggregation(args: argparse.Namespace) -> int:
    template = _template_from_args(args)
    sweep = LengthSweep(args.start, args.step, args.stop, args.errors, args.repeats)
    outcomes = compare_aggregation(template, sweep, base_seed=args.base_seed, workers=args.workers)
    identical = sum(1 for o in outcomes if o.frames_identical)
    reductions = [
        1.0 - o.batched.messages_sent / o.unbatched.messages_sent for o in outcomes
    ]
    if args.out:
        export_records([o.batched for o in outcomes], args.out, args.format)
        print(f"wrote {len(outcomes)} batched records to {args.out}")
    print(
        "pairs={} identical_frames={} median_message_reduction={:.1%}".format(
            len(outcomes), identical, statistics.median(reductions)
        )
    )
    return 0 if identical == len(outcomes) else 1


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        handler = {
            "run": _cmd_run,
            "sweep-qber": _cmd_sweep_qber,
            "sweep-length": _cmd_sweep_length,
            "compare-aggregation": _cmd_compare_aggregation,
        }[args.command]
        return handler(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ProtocolError, TransportError, DecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
