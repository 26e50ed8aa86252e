#!/usr/bin/env python3
"""Full synthetic benchmark: generate, clean, index, train all models,
pool + auto-judge, 5-fold CV over the feature sets, print the comparison
grid. Results land in --workdir (models/ + report.json).

    python3 scripts/run_benchmark.py --workdir /tmp/stc-bench --seed 0
"""

import argparse
import sys
import time

from stc.benchmark import FEATURE_SETS, PipelineConfig, comparison_grid, run_pipeline


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--feature-sets", default="baseline,full",
                        help=f"comma-separated subset of: {', '.join(FEATURE_SETS)}")
    args = parser.parse_args()

    sets = tuple(s.strip() for s in args.feature_sets.split(",") if s.strip())
    unknown = [s for s in sets if s not in FEATURE_SETS]
    if unknown:
        print(f"unknown feature sets: {unknown}", file=sys.stderr)
        return 1

    started = time.time()
    result = run_pipeline(args.workdir, PipelineConfig(seed=args.seed,
                                                       feature_sets=sets))
    print(comparison_grid(result.reports))
    for name, tt in sorted(result.ttests.items()):
        if tt:
            print(f"paired t-test {name}: t={tt[0]:.4f} p={tt[1]:.6f}")
    print(f"\n{len(result.judgments)} judged queries, "
          f"{time.time() - started:.0f}s")
    print(f"models -> {result.model_dir}")
    print(f"report -> {result.report_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
