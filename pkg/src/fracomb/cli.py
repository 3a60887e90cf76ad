"""Command-line entry point: ``fracomb <experiment> [--config FILE] [--out DIR] [--override k=v ...]``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration
error, 3 numerical abort (boundary leakage or precision loss).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config, parse_config, schema_text
from .errors import BoundaryLeakageError, InvalidInputError, OutOfRegimeError, PrecisionLossError, SolverError
from .experiments import RUNNERS
from .report import emit_report, summary_text

SUBCOMMANDS = {"identities": "identities", "equivalence": "equivalence",
               "greens": "greens_compare", "convergence": "convergence"}

log = logging.getLogger("fracomb")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracomb", description="Fractional-time Schrodinger / quantum comb checks.",
                                epilog="Config keys:\n" + schema_text(),
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("experiment", choices=sorted(SUBCOMMANDS))
    p.add_argument("--config", help="key = value file")
    p.add_argument("--out", help="output directory (overrides the 'out' key)")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def _file_experiment(path) -> str:
    return load_config(path).experiment


def main(argv=None) -> int:
    p = build_parser()
    try:
        args = p.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    overrides = [f"experiment={SUBCOMMANDS[args.experiment]}"] + list(args.override)
    if args.out:
        overrides.append(f"out={args.out}")
    try:
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            cfg = parse_config("", "<defaults>", overrides)
    except ConfigError as e:
        print(f"fracomb: configuration error: {e}", file=sys.stderr)
        return 2
    if "experiment" in cfg.from_file and _file_experiment(args.config) != SUBCOMMANDS[args.experiment]:
        print("fracomb: configuration error: experiment key disagrees with subcommand", file=sys.stderr)
        return 2
    try:
        manifest = RUNNERS[cfg.experiment](cfg)
    except (BoundaryLeakageError, PrecisionLossError, SolverError) as e:
        print(f"fracomb: numerical abort: {e}", file=sys.stderr)
        return 3
    except (InvalidInputError, OutOfRegimeError, OSError) as e:
        # grid, mode or potential file inconsistent with the run
        print(f"fracomb: configuration error: {e}", file=sys.stderr)
        return 2
    try:
        d = emit_report(manifest, cfg.out)
    except OSError as e:
        print(f"fracomb: cannot write report: {e}", file=sys.stderr)
        return 2
    if not args.quiet:
        print(summary_text(manifest), end="")
    log.info("report written to %s", d)
    return 1 if manifest.failed else 0


if __name__ == "__main__":
    sys.exit(main())
