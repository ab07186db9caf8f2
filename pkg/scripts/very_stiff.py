#!/usr/bin/env python3
"""Very stiff case (r = 10): default small damping, tuned plain damping,
and the best accelerated configuration, overlaid in one SVG."""

import argparse
import os

from aatransport import svgplot
from aatransport.accel import AccelConfig
from aatransport.problem import (ExperimentConfig, ProblemConfig,
                                 run_experiment)

RUNS = [
    ("default (beta=0.06)", AccelConfig(beta=0.06, tol=1e-11, k_max=3000)),
    ("tuned plain (beta=0.15)",
     AccelConfig(beta=0.15, tol=1e-11, k_max=3000)),
    ("accelerated (beta=0.14, m=4)",
     AccelConfig(beta=0.14, m_max=4, tol=1e-11, k_max=3000)),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results/very_stiff")
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    series = []
    for label, accel in RUNS:
        cfg = ExperimentConfig(
            problem=ProblemConfig(r=10.0, initial_profile="steady_plus"),
            accel=accel)
        rep = run_experiment(cfg)
        series.append((f"{label}: {rep.iterations}",
                       [t.k for t in rep.trace],
                       [t.residual_norm for t in rep.trace]))
        print(f"{label}: {rep.status} in {rep.iterations}")
    svgplot.line_plot(series, os.path.join(args.out_dir, "histories.svg"),
                      title="Very stiff problem convergence histories")


if __name__ == "__main__":
    main()
