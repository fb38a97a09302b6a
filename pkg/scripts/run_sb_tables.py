#!/usr/bin/env python3
"""Scaled-boundary error sweeps: the biquadratic and bicubic single-patch
domains, polynomial and transcendental targets, plus the tensor-grid
comparison on the bicubic patch.  Emits one CSV per experiment."""

import argparse
import os

from ringapprox.cli import ExperimentConfig, cmd_convergence


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-o", "--outdir", default="out")
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--threads", type=int, default=0)
    args = ap.parse_args()
    os.makedirs(args.outdir, exist_ok=True)

    runs = [
        ("sb1_x2.csv", dict(domain="sb1", p=[2, 3, 4], target="x^2")),
        ("sb1_x3.csv", dict(domain="sb1", p=[2, 3, 4, 5], target="x^3")),
        ("sb1_cos_sin.csv", dict(domain="sb1", p=[2, 3, 4, 5], target="cos-sin")),
        ("sb2_x.csv", dict(domain="sb2", p=[2], target="x")),
        ("sb2_x2.csv", dict(domain="sb2", p=[2, 3, 4, 5], target="x^2")),
        ("sb2_x2_tensor.csv", dict(domain="sb2", p=[2, 3, 4, 5], target="x^2", tensor=True)),
    ]
    for fname, kw in runs:
        cfg = ExperimentConfig(levels=args.levels, threads=args.threads, **kw)
        path = os.path.join(args.outdir, fname)
        with open(path, "w", newline="") as fh:
            fh.write(cmd_convergence(cfg))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
