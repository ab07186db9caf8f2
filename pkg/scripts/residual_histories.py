#!/usr/bin/env python3
"""Residual histories on the stiff (r = 2) problem: default damping,
optimized damping, fixed-depth acceleration, and the adaptive variants,
overlaid in one SVG."""

import argparse
import os

from aatransport import svgplot
from aatransport.accel import AccelConfig
from aatransport.problem import (ExperimentConfig, ProblemConfig,
                                 run_experiment)

RUNS = [
    ("default (beta=0.3)", AccelConfig(beta=0.3, tol=1e-11, k_max=300)),
    ("optimized (beta=0.4)", AccelConfig(beta=0.4, tol=1e-11, k_max=300)),
    ("accelerated (beta=0.3, m=5, d=1)",
     AccelConfig(beta=0.3, m_max=5, delay=1, tol=1e-11, k_max=300)),
    ("adaptive depth (beta=0.5, m<=10)",
     AccelConfig(beta=0.5, m_max=10, depth_mode="adaptive", tol=1e-11,
                 k_max=300)),
    ("adaptive damping+depth",
     AccelConfig(beta=0.5, m_max=10, depth_mode="adaptive",
                 damping_mode="adaptive", tol=1e-11, k_max=300)),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results/residual_histories")
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    series = []
    for label, accel in RUNS:
        cfg = ExperimentConfig(problem=ProblemConfig(r=2.0), accel=accel)
        rep = run_experiment(cfg)
        ks = [t.k for t in rep.trace]
        rs = [t.residual_norm for t in rep.trace]
        series.append((f"{label}: {rep.iterations}", ks, rs))
        print(f"{label}: {rep.status} in {rep.iterations}")
    svgplot.line_plot(series, os.path.join(args.out_dir, "histories.svg"),
                      title="Stiff problem convergence histories")


if __name__ == "__main__":
    main()
