"""Synthetic benchmark grid: STICC over R and beta plus the K-Means baselines.

    python3 scripts/run_benchmark.py --seeds 5 --jobs 4 --out results/benchmark
"""
import argparse
import sys

from sticc.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/benchmark")
    a = ap.parse_args()
    sys.exit(main(["benchmark", "--seeds", str(a.seeds), "--jobs", str(a.jobs), "--out", a.out]))
