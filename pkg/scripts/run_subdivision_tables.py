#!/usr/bin/env python3
"""Sector-restricted error sweeps on characteristic rings.

Catmull-Clark valences 3/5/6 and Doo-Sabin valences 3/5/6, targets
x^2+y^2 and sin(x)cos(y+1); for Catmull-Clark also a table with log2 and
log-lambda columns side by side."""

import argparse
import os

import numpy as np

from ringapprox.approx import TargetFunction, mesh_error
from ringapprox.cli import ExperimentConfig, cmd_convergence
from ringapprox.geometry import CapKind, build_mesh
from ringapprox.subdivision import Scheme, SchemeId, characteristic_ring


def cc_loglambda_table(valence, degrees, levels, threads):
    ring = characteristic_ring(SchemeId(Scheme.CATMULL_CLARK, valence))
    spec = ring.ring_spec()
    phi = TargetFunction.sum_squares()
    lines = ["level," + ",".join(f"p{p}_log2,p{p}_loglambda" for p in degrees)]
    cols = {}
    for p in degrees:
        cols[p] = [
            mesh_error(phi, build_mesh(spec, lvl, CapKind.COONS_PATCH), p,
                       sector_only=True, threads=threads).total
            for lvl in range(levels + 1)
        ]
    for lvl in range(levels + 1):
        cells = []
        for p in degrees:
            e = cols[p][lvl]
            cells.append(f"{np.log2(e):.4f}")
            cells.append(f"{np.log(e) / np.log(ring.lam):.4f}")
        lines.append(f"{lvl}," + ",".join(cells))
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-o", "--outdir", default="out")
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--threads", type=int, default=0)
    args = ap.parse_args()
    os.makedirs(args.outdir, exist_ok=True)
    threads = args.threads or (os.cpu_count() or 1)

    for scheme in ("cc", "ds"):
        for valence in (3, 5, 6):
            for target in ("x^2+y^2", "sin-cos"):
                p_list = [3, 4, 5] if scheme == "cc" else [2, 3, 4]
                cfg = ExperimentConfig(
                    domain=f"{scheme}:{valence}", p=p_list, levels=args.levels,
                    target=target, sector_only=True, threads=args.threads,
                )
                tag = "ss" if target == "x^2+y^2" else "sincos"
                path = os.path.join(args.outdir, f"{scheme}{valence}_{tag}.csv")
                with open(path, "w", newline="") as fh:
                    fh.write(cmd_convergence(cfg))
                print(f"wrote {path}")

    for valence in (3, 5):
        path = os.path.join(args.outdir, f"cc{valence}_loglambda.csv")
        with open(path, "w", newline="") as fh:
            fh.write(cc_loglambda_table(valence, [3, 4, 5], args.levels, threads))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
