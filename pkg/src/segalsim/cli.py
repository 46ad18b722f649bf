"""Command-line scenario runner.

    segalsim run <config.json> [--seed N] [--events N]
                 [--format json|csv] [--out PATH] [--quiet]

Exit codes: 0 success, 1 config/validation error, 2 numerical-invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import InvariantViolation
from .scenarios import ConfigError, emit_report, parse_scenario, run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="segalsim", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a scenario config")
    run.add_argument("config", help="path to a JSON scenario document")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--events", type=int, default=None, help="override the event count")
    run.add_argument("--format", choices=("json", "csv"), default=None, help="report format")
    run.add_argument("--out", default=None, help="write the report here instead of stdout")
    run.add_argument("--quiet", action="store_true", help="suppress progress notes on stderr")
    return parser


def _apply_overrides(text: str, args: argparse.Namespace) -> str:
    if args.seed is None and args.events is None and args.format is None:
        return text
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config document: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a JSON object")
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.events is not None:
        raw["n_events"] = args.events
    if args.format is not None:
        raw["output_format"] = args.format
    return json.dumps(raw)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1

    try:
        cfg = parse_scenario(_apply_overrides(text, args))
        report = run_scenario(cfg)
        document = emit_report(report, fmt=cfg.output_format, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"numerical invariant violated: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.out is None:
        try:
            sys.stdout.write(document)
            sys.stdout.flush()
        except BrokenPipeError:
            # downstream consumer (head, etc.) closed the pipe; not an error
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
            return 0
    if not args.quiet:
        print(
            f"{cfg.scenario}: done in {report.wall_time_s:.3f}s"
            + (f", report at {args.out}" if args.out else ""),
            file=sys.stderr,
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
