"""Run validation studies and write their tables under one output root.

    python scripts/run_experiments.py                  # every study
    python scripts/run_experiments.py stability hn-bound --out runs/
"""

import argparse
import os
import sys
import time

from steinflow.experiments import EXPERIMENTS, ExperimentConfig, run_experiment


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("names", nargs="*", help=f"subset of {', '.join(EXPERIMENTS)}")
    parser.add_argument("--out", default="steinflow-out/experiments")
    parser.add_argument("--seed", type=int)
    args = parser.parse_args(argv)
    names = args.names or list(EXPERIMENTS)
    unknown = [n for n in names if n not in EXPERIMENTS]
    if unknown:
        parser.error(f"unknown experiment(s) {', '.join(unknown)}")
    failed = []
    for name in names:
        start = time.perf_counter()
        cfg = ExperimentConfig.load(name, out_dir=os.path.join(args.out, name), seed=args.seed)
        rep = run_experiment(cfg)
        print(rep.summary(), end="")
        print(f"  ({time.perf_counter() - start:.1f}s, tables in {cfg.out_dir})\n")
        if not rep.passed:
            failed.append(name)
    if failed:
        print(f"failing studies: {', '.join(failed)}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
