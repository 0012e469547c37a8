"""Run the comparison suites and print their claims.

    python3 scripts/run_suites.py --seed 42 --out-dir results
    python3 scripts/run_suites.py --only deep_table2 --replicates 3
"""

import argparse
import sys
import time

from quadnet.experiments import SUITES, SuiteConfig, compare_suite


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--only", action="append", choices=SUITES)
    ap.add_argument("--replicates", type=int, default=5)
    args = ap.parse_args()

    sc = SuiteConfig(replicates=args.replicates)
    ok = True
    for name in args.only or SUITES:
        start = time.perf_counter()
        res = compare_suite(name, args.seed, args.out_dir, sc)
        print(f"== {name} ({time.perf_counter() - start:.1f} s, {res.failures} failed runs)")
        print(res.summary_csv, end="")
        for c in res.claims:
            print(f"  {c.name}: {c.value:.6g} vs {c.threshold:.6g} -> {'pass' if c.passed else 'fail'}")
        ok = ok and res.ok
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
