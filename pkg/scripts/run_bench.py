#!/usr/bin/env python3
"""Run the default benchmark suite and drop the reports in one place.

Usage:
    python scripts/run_bench.py [--outdir bench_out] [--suite FILE] [--seed N]

Produces <outdir>/report.json and <outdir>/report.md, prints the markdown
table, and exits nonzero if any row failed its oracle.
"""

import argparse
import pathlib
import sys

from graphpulse.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="bench_out")
    parser.add_argument("--suite", default=None, help="suite file; defaults to the built-in suite")
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    argv = [
        "bench",
        "--seed", str(args.seed),
        "--out", str(outdir / "report.json"),
        "--md", str(outdir / "report.md"),
        "--format", "md",
    ]
    if args.suite:
        argv += ["--suite", args.suite]
    code = cli_main(argv)
    print(f"\nreports written to {outdir}/report.json and {outdir}/report.md")
    return code


if __name__ == "__main__":
    sys.exit(main())
