#!/usr/bin/env python3
"""Regenerate the best-possible convergence-rate tables (text and CSV)."""

import argparse
import os

from ringapprox.rates import summary_tables, summary_tables_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-o", "--outdir", default=None, help="write files here instead of stdout")
    args = ap.parse_args()
    text = summary_tables()
    if args.outdir:
        os.makedirs(args.outdir, exist_ok=True)
        with open(os.path.join(args.outdir, "rate_tables.txt"), "w", newline="") as fh:
            fh.write(text)
        with open(os.path.join(args.outdir, "rate_tables.csv"), "w", newline="") as fh:
            fh.write(summary_tables_csv())
        print(f"wrote {args.outdir}/rate_tables.txt and .csv")
    else:
        print(text, end="")


if __name__ == "__main__":
    main()
