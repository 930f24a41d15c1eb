"""Run every study config in configs/ and summarise the exit codes.

usage: python3 scripts/run_all_studies.py [--out results] [--only spatial_heat,geometry_sphere]
"""

import argparse
import glob
import os
import sys
import time
from dataclasses import replace

from surfheat import cli
from surfheat.config import parse_config

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(ROOT, "results"))
    ap.add_argument("--only", help="comma list of config stems")
    args = ap.parse_args()
    paths = sorted(glob.glob(os.path.join(ROOT, "configs", "*.cfg")))
    if args.only:
        keep = set(args.only.split(","))
        paths = [p for p in paths if os.path.splitext(os.path.basename(p))[0] in keep]
    summary = []
    for path in paths:
        stem = os.path.splitext(os.path.basename(path))[0]
        cfg = replace(parse_config(path), output_dir=os.path.join(args.out, stem))
        t0 = time.perf_counter()
        code = cli.run(cfg, no_timestamp=True)
        summary.append((stem, code, time.perf_counter() - t0))
    print("\nstudy                 exit   seconds")
    for stem, code, secs in summary:
        print(f"{stem:<21} {code:>4} {secs:9.1f}")
    return max((c for _, c, _ in summary), default=0)


if __name__ == "__main__":
    sys.exit(main())
