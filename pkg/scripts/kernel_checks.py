"""Sampled checks of the sigmoid kernel conditions, printed as a table.

    python3 scripts/kernel_checks.py --samples 10000 --c-sigma 1e6
"""

import argparse
import sys
import time

from quadnet import ati_checker as ati
from quadnet.frame import normalize_mother


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--r", type=float, default=4.0)
    ap.add_argument("--n", type=int, default=1, help="kernel dimension")
    ap.add_argument("--c-sigma", type=float, default=ati.C_SIGMA)
    args = ap.parse_args()

    start = time.perf_counter()
    reports = ati.run_all(normalize_mother(args.r, args.n), args.samples, args.seed, args.c_sigma)
    width = max(len(r.condition) for r in reports)
    for r in reports:
        acc = "" if r.acceptance is None else f"  acceptance {r.acceptance:.3f}"
        print(f"{r.condition:<{width}}  {r.samples:6d}  violations {r.violations:4d}  "
              f"worst margin {r.worst_margin:+.3e}{acc}")
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports) - failed}/{len(reports)} passed in {time.perf_counter() - start:.1f} s")
    return 0 if failed == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
