#!/usr/bin/env python3
"""Budgeted tuning of {beta, m, d} on the stiff problem at three target
tolerances, default configuration seeded into each initial batch."""

import argparse
import subprocess
import sys


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results/tuning")
    ap.add_argument("--budget", default="10,50")
    args = ap.parse_args()
    for tol in ("1e-6", "1e-8", "1e-11"):
        subprocess.run(
            [sys.executable, "-m", "aatransport.cli", "tune",
             "--budget", args.budget,
             "--set", f"accel.tol={tol}", "--set", "accel.k_max=300",
             "--seed", "0",
             "--out-dir", f"{args.out_dir}/tol_{tol}"],
            check=True)


if __name__ == "__main__":
    main()
