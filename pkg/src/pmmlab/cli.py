"""Command-line entry point: ``pmmlab validate|synth|run``.

Exit status is 0 on success, 1 on a validation or configuration failure and
2 on a runtime failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence, TextIO

from . import __version__
from .config import (
    build_manifest,
    feed_checksum,
    load_config,
    parse_list,
    read_manifest,
    write_manifest,
)
from .errors import ConfigError, FeedError, PmmError
from .feed import format_feed, format_timestamp, scan_feed, write_feed
from .simulator import K_DEPENDENT, ScenarioConfig, ScenarioResult, run_scenario, write_outputs
from .synth import SYNTH_KINDS, SynthParams, synth_feed

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2
MANIFEST_NAME = "manifest.json"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# -- validate -----------------------------------------------------------------------


def cmd_validate(path: str, out: TextIO) -> int:
    if not Path(path).is_file():
        raise CliError(f"feed not found: {path}", EXIT_INVALID)
    report = scan_feed(path)
    print(f"feed: {path}", file=out)
    print(f"rows: {len(report.rows)}", file=out)
    print(f"tokens: {', '.join(report.tokens) or '-'}", file=out)
    span = report.time_range
    if span:
        print(f"range: {format_timestamp(span[0])} .. {format_timestamp(span[1])}", file=out)
    for d in report.defects:
        print(f"defect: {d}", file=out)
    print(f"{len(report.defects)} defects", file=out)
    return EXIT_OK if report.ok else EXIT_INVALID


# -- synth --------------------------------------------------------------------------

_SYNTH_FLAGS = {
    "hours": int, "tokens": int, "start": str, "volatility": float, "drift": float,
    "base_market_cap": float, "cap_decay": float, "volume_fraction": float,
    "crash_token": str, "crash_factor": float, "crash_start": int, "crash_hours": int,
}


def cmd_synth(args: argparse.Namespace, out: TextIO) -> int:
    chosen = {k: getattr(args, k) for k in _SYNTH_FLAGS if getattr(args, k) is not None}
    try:
        params = SynthParams(**chosen)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID) from exc
    rows = synth_feed(args.kind, params, args.seed)
    if args.out:
        try:
            write_feed(rows, args.out)
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}", EXIT_RUNTIME) from exc
        print(f"wrote {len(rows)} rows to {args.out}", file=out)
    else:
        out.write(format_feed(rows))
    return EXIT_OK


# -- run ----------------------------------------------------------------------------


def apply_overrides(config: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.makers is not None:
        changes["makers"] = parse_list("makers", args.makers)
    if args.k is not None:
        changes["k_values"] = parse_list("k", args.k, float)
    if args.swaps_per_hour is not None:
        changes["swaps_per_hour"] = args.swaps_per_hour
    makers = changes.get("makers", config.makers)
    if args.k is not None and not any(m in K_DEPENDENT for m in makers):
        raise ConfigError("--k given but no k-dependent maker (pmm, mpmm) is selected")
    try:
        return replace(config, **changes)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _q(v: float) -> str:
    return "-" if math.isnan(v) else f"{v:.6g}"


def format_summary(result: ScenarioResult) -> str:
    head = f"{'maker':<12} {'metric':<20} {'q1':>12} {'median':>12} {'q3':>12} {'count':>7}"
    lines = [head, "-" * len(head)]
    for maker, metric, q1, med, q3, count in result.summary():
        lines.append(f"{maker:<12} {metric:<20} {_q(q1):>12} {_q(med):>12} {_q(q3):>12} {count:>7}")
    if result.refused:
        refused = ", ".join(f"{m}={n}" for m, n in result.refused.items() if n)
        lines.append(f"refused swaps: {refused or 'none'}")
    return "\n".join(lines)


def cmd_run(args: argparse.Namespace, out: TextIO) -> int:
    source = Path(args.config)
    if source.suffix == ".json":
        config, manifest = read_manifest(source)
        expected = manifest.get("feed_sha256")
        default_out = manifest.get("out_dir", "out")
    else:
        config, expected, default_out = load_config(source), None, "out"
    config = apply_overrides(config, args)
    checksum = feed_checksum(config)
    if expected is not None and checksum != expected and args.seed is None:
        raise ConfigError(f"feed checksum {checksum} differs from manifest {expected}")
    out_dir = Path(args.out_dir or default_out)
    result = run_scenario(config)
    paths = write_outputs(result, out_dir)
    write_manifest(build_manifest(config, out_dir, checksum), out_dir / MANIFEST_NAME)
    print(format_summary(result), file=out)
    print(f"outputs: {', '.join(str(p) for p in paths.values())}, {out_dir / MANIFEST_NAME}", file=out)
    return EXIT_OK


# -- entry point --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmmlab", description="PMM and multi-token AMM simulator")
    parser.add_argument("--version", action="version", version=f"pmmlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a price/volume feed")
    v.add_argument("feed")

    s = sub.add_parser("synth", help="generate a synthetic feed")
    s.add_argument("kind", choices=SYNTH_KINDS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="output path (stdout when omitted)")
    for name, kind in _SYNTH_FLAGS.items():
        s.add_argument("--" + name.replace("_", "-"), dest=name, type=kind)

    r = sub.add_parser("run", help="run a scenario from a config file or manifest")
    r.add_argument("config", help="scenario .ini file or manifest.json")
    r.add_argument("--seed", type=int)
    r.add_argument("--out-dir")
    r.add_argument("--makers", help="comma-separated maker kinds")
    r.add_argument("--k", help="comma-separated k values")
    r.add_argument("--swaps-per-hour", type=int)
    return parser


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args.feed, out)
        if args.command == "synth":
            return cmd_synth(args, out)
        return cmd_run(args, out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, FeedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (PmmError, ArithmeticError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
