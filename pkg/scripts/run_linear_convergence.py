#!/usr/bin/env python3
"""Weak-convergence table for the scalar linear problem at t = 1.7.

Reproduces the desk-scale bias table for a chosen scheme: for each step
size it estimates E[Y(1.7)] by Monte Carlo, subtracts the closed-form
reference 0.1 e^{1.5 t}, and prints the error with a confidence interval,
finishing with the fitted log2 slope.

Usage:
    python scripts/run_linear_convergence.py [--scheme CRDI3WM] [--M 1000000]
"""

import argparse
import sys

from csrk.cli import main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scheme", default="CRDI3WM")
    ap.add_argument("--M", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--output", default=None)
    args = ap.parse_args(argv)

    cli_args = [
        "converge",
        "--scheme", args.scheme,
        "--problem", "linear",
        "--f", "x",
        "--t-eval", "1.7",
        "--h-list", "0.5,0.25,0.125,0.0625",
        "--M", str(args.M),
        "--seed", str(args.seed),
        "--threads", str(args.threads),
    ]
    if args.output:
        cli_args += ["--output", args.output]
    return main(cli_args)


if __name__ == "__main__":
    sys.exit(run())
