#!/usr/bin/env python3
"""Damping x depth sweeps on the stiff (r = 2) problem, with and without
an acceleration delay; writes heatmap CSV/SVG pairs."""

import argparse
import subprocess
import sys


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results/stiff_sweep")
    ap.add_argument("--jobs", type=int, default=None)
    args = ap.parse_args()
    jobs = [] if args.jobs is None else ["--jobs", str(args.jobs)]
    for d in (0, 1):
        cmd = [sys.executable, "-m", "aatransport.cli", "sweep",
               "--grid", "beta=0.05:1.0:0.05", "--grid", "m=0:10:1",
               "--grid", f"d={d}",
               "--set", "accel.tol=1e-11", "--set", "accel.k_max=2000",
               "--out-dir", f"{args.out_dir}/d{d}", "--plot", *jobs]
        subprocess.run(cmd, check=True)


if __name__ == "__main__":
    main()
