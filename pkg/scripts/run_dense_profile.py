#!/usr/bin/env python3
"""Dense-output error profile for the scalar linear problem.

For each step of a fixed grid and each requested interpolation parameter
theta, estimates the weak error of the continuous output
E[Y(t_n + theta h)] - reference by Monte Carlo and emits one CSV row per
(step, theta) pair. Useful for checking that the interpolant stays at the
accuracy of the underlying scheme between nodes.

Usage:
    python scripts/run_dense_profile.py [--scheme CRDI3WM] [--h 0.25]
"""

import argparse
import sys

from csrk.cli import main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scheme", default="CRDI3WM")
    ap.add_argument("--h", type=float, default=0.25)
    ap.add_argument("--theta-list", default="0.25,0.5,0.75")
    ap.add_argument("--M", type=int, default=10**5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--output", default=None)
    args = ap.parse_args(argv)

    cli_args = [
        "dense",
        "--scheme", args.scheme,
        "--problem", "linear",
        "--h", str(args.h),
        "--theta-list", args.theta_list,
        "--M", str(args.M),
        "--seed", str(args.seed),
        "--threads", str(args.threads),
    ]
    if args.output:
        cli_args += ["--output", args.output]
    return main(cli_args)


if __name__ == "__main__":
    sys.exit(run())
