#!/usr/bin/env python3
"""Noisy-flux study: stagnating residual histories at a visible noise
level, plus a damping x depth heatmap of iterations to a 1e-4 tolerance
at the default noise level."""

import argparse
import os
import subprocess
import sys

from aatransport import svgplot
from aatransport.accel import AccelConfig
from aatransport.flux import NoiseModel
from aatransport.problem import (ExperimentConfig, ProblemConfig,
                                 run_experiment)

RUNS = [
    ("plain (beta=0.3)", AccelConfig(beta=0.3, tol=1e-13, k_max=300)),
    ("plain (beta=0.4)", AccelConfig(beta=0.4, tol=1e-13, k_max=300)),
    ("accelerated (beta=0.4, m=3, d=2)",
     AccelConfig(beta=0.4, m_max=3, delay=2, tol=1e-13, k_max=300)),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results/noise_study")
    ap.add_argument("--jobs", type=int, default=None)
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)

    series = []
    for label, accel in RUNS:
        cfg = ExperimentConfig(problem=ProblemConfig(r=2.0), accel=accel,
                               noise=NoiseModel(amplitude=0.01, seed=7))
        rep = run_experiment(cfg)
        series.append((label, [t.k for t in rep.trace],
                       [t.residual_norm for t in rep.trace]))
        print(f"{label}: floor near "
              f"{min(t.residual_norm for t in rep.trace):.2e}")
    svgplot.line_plot(series, os.path.join(args.out_dir, "histories.svg"),
                      title="Noisy flux: residual stagnation")

    jobs = [] if args.jobs is None else ["--jobs", str(args.jobs)]
    subprocess.run(
        [sys.executable, "-m", "aatransport.cli", "sweep",
         "--grid", "beta=0.05:1.0:0.05", "--grid", "m=0:6:1",
         "--grid", "d=2",
         "--set", "accel.tol=1e-4", "--set", "accel.k_max=300",
         "--set", "noise.amplitude=0.001", "--seed", "7",
         "--out-dir", os.path.join(args.out_dir, "heatmap"),
         "--plot", *jobs],
        check=True)


if __name__ == "__main__":
    main()
