"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 degenerate lattice,
3 root-find did not converge, 4 residual check failed, 5 even chain period.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import reports
from .config import ConfigError, load_config
from .errors import DressingChainError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RESIDUAL = 4

COMMANDS = {
    "invariants": reports.invariants_report,
    "solve": reports.solve_report,
    "verify": reports.verify_report,
    "tau": reports.tau_report,
    "lame": reports.lame_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dressing-chain",
        description="Closed N=3 dressing chain: elliptic reduction, closed-form solution and checks.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="flat key = value configuration file")
    parser.add_argument("--out", type=Path, help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), help="output format")
    parser.add_argument("--tolerance", type=float, help="verification tolerance")
    parser.add_argument(
        "--set",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        help="override a configuration key (repeatable)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    for item in args.set:
        if "=" not in item:
            print(f"error: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return EXIT_USAGE
        k, v = item.split("=", 1)
        overrides[k] = v
    if args.format:
        overrides["output_format"] = args.format
    if args.tolerance is not None:
        overrides["tolerance"] = repr(args.tolerance)
    try:
        cfg = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        report = COMMANDS[args.command](cfg)
    except DressingChainError as exc:
        detail = f" (discriminant {exc.discriminant:.17g})" if getattr(exc, "discriminant", None) is not None else ""
        print(f"error: {type(exc).__name__}: {exc}{detail}", file=sys.stderr)
        return exc.exit_code

    text = reports.render(report, cfg.output_format)
    if args.out is not None:
        args.out.write_text(text)
        sys.stdout.write(reports.render_summary(report))
    else:
        sys.stdout.write(text)
        if cfg.output_format == "csv" and (report.columns or report.lines):
            sys.stderr.write(reports.render_summary(report))
    if not report.passed:
        print(f"{args.command}: residual checks failed", file=sys.stderr)
        return EXIT_RESIDUAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
