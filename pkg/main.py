import argparse
import logging
import os
import sys
from typing import List, Optional

import report_pdf
import suites
from config_loader import MODES, SUITES, ConfigError, load_model

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

logger = logging.getLogger("RiskTree")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risktree",
        description="Checks set-valued dynamic risk measures on a finite scenario tree.",
    )
    parser.add_argument("config", nargs="?", help="model file (JSON)")
    parser.add_argument("--suite", help=f"one of {', '.join(SUITES)} (default: the model's, else all)")
    parser.add_argument("--seed", type=int, help="base seed (default: duals.seed of the model, else 0)")
    parser.add_argument("--tolerance", type=float, help="absolute tolerance of LP and set comparisons")
    parser.add_argument("--mode", choices=MODES, help="float (HiGHS) or rational (exact cdd arithmetic)")
    parser.add_argument("--out", help="directory for report.json, report.txt and report.pdf")
    parser.add_argument("--explain", metavar="ID", help="print what a check verifies and exit")
    parser.add_argument("--threads", type=int, help="worker threads (capped by RISKTREE_THREADS)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every check as it runs")
    return parser


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s [%(name)s] [%(levelname)s] %(message)s",
        datefmt="%H:%M:%S",
    )

    if args.explain:
        try:
            print(suites.explain(args.explain))
            return EXIT_OK
        except KeyError as e:
            print(f"❌ {e.args[0]}", file=sys.stderr)
            return EXIT_USAGE

    if not args.config:
        print("❌ a model file is required (or --explain ID)", file=sys.stderr)
        return EXIT_USAGE
    if args.suite is not None and args.suite not in SUITES:
        label = "empty suite selection" if not args.suite else f"unknown suite {args.suite!r}"
        print(f"❌ {label} (known: {', '.join(SUITES)})", file=sys.stderr)
        return EXIT_USAGE

    overrides = {"seed": args.seed, "tolerance": args.tolerance, "mode": args.mode, "suite": args.suite}
    try:
        model = load_model(args.config, overrides)
    except ConfigError as e:
        for error in e.errors:
            print(f"❌ {error}", file=sys.stderr)
        return EXIT_USAGE

    if args.out:
        try:
            os.makedirs(args.out, exist_ok=True)
            marker = os.path.join(args.out, ".write_test")
            _write(marker, "")
            os.remove(marker)
        except OSError as e:
            print(f"❌ output directory {args.out} is not writable: {e}", file=sys.stderr)
            return EXIT_USAGE

    report, timings = suites.run_suite(model, model.suite, model.seed, args.threads)
    text = suites.render_text(report, timings)
    print(text, end="")

    if args.out:
        _write(os.path.join(args.out, "report.json"), suites.report_json(report))
        _write(os.path.join(args.out, "report.txt"), text)
        report_pdf.write_pdf(report, os.path.join(args.out, "report.pdf"), timings)
        logger.info(f"✅ Reports written to {args.out}")

    return suites.exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
