"""Greedy N-term error against the L1-norm rate bound for random 1-D frame expansions.

Writes one CSV per target (N,error,bound,log_ratio) and prints a summary line each.

    python3 scripts/rate_curve.py --targets 20 --out-dir results/rate
"""

import argparse
import sys
from pathlib import Path

from quadnet.core_math import Rng
from quadnet.frame import normalize_mother, rate_experiment, synthetic_target


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--targets", type=int, default=20)
    ap.add_argument("--r", type=float, default=4.0)
    ap.add_argument("--max-log2", type=int, default=8)
    ap.add_argument("--out-dir", default="results/rate")
    args = ap.parse_args()

    mother = normalize_mother(args.r, 1)
    rng = Rng(args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    Ns = [2**i for i in range(args.max_log2 + 1)]
    ok = True
    for t in range(args.targets):
        res = rate_experiment(mother, synthetic_target(mother, rng.spawn_seed()), Ns)
        (out / f"rate_target{t:02d}.csv").write_text(res.to_csv())
        below = all(row.error <= row.bound * (1 + 1e-6) + 1e-5 for row in res.rows)
        worst = max(row.log_ratio for row in res.rows)
        print(f"target {t:2d}: {res.n_atoms:3d} atoms, |f|_1 = {res.l1_norm:8.2f}, "
              f"max log_ratio {worst:+.3f}, below bound: {below}, monotone: {res.monotone}")
        ok = ok and below and worst <= -0.5 + 1e-6
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
