"""Run compare, ablate and sweep on every benchmark whose data file is present.

Usage: python scripts/run_benchmarks.py [--data-dir data] [--out reports] [--seed 42]
"""
import argparse
import sys
import time
from pathlib import Path

from bmnb.cli import main as bmnb

BENCHMARKS = ("adult", "compas", "framingham")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data-dir", default="data")
    ap.add_argument("--out", default="reports")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--include-synthetic", action="store_true")
    args = ap.parse_args(argv)

    jobs = []
    for name in BENCHMARKS:
        path = Path(args.data_dir) / f"{name}.csv"
        if path.exists():
            jobs.append(["--dataset", name, "--data", str(path)])
        else:
            print(f"skipping {name}: {path} not found", file=sys.stderr)
    if args.include_synthetic:
        jobs.append(["--dataset", "synthetic"])

    worst = 0
    for common in jobs:
        common = common + ["--seed", str(args.seed), "--out", args.out]
        for command in (["compare"], ["ablate"], ["sweep", "--variant", "full_bmnb"],
                        ["sweep", "--variant", "blended_only"]):
            t = time.perf_counter()
            code = bmnb(command + common)
            print(f"== {common[1]} {' '.join(command)}: exit {code} in {time.perf_counter() - t:.1f}s")
            worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
