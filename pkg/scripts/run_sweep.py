#!/usr/bin/env python3
"""Branching-factor sweep for the b-tree decoder.

For fixed (n, k, delta), larger branching factors buy fewer measurement rows
at the price of more point queries per level.  Writes one CSV per branching
factor and prints a summary table.
"""

import argparse
import pathlib

from onebitcs import harness


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1 << 14)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--trials", type=int, default=40)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--outdir", default="sweep-out")
    args = ap.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    print(f"{'b':>5} {'rows':>10} {'median ops':>12} {'success':>8}")
    for b in (2, 4, 8, 16, 32):
        config = harness.ExperimentConfig(
            scheme="btree", n=args.n, k=args.k, delta=args.delta, b=b,
            trials=args.trials, seed=args.seed,
        )
        records = harness.run_experiment(config)
        path = outdir / f"btree_b{b}.csv"
        harness.emit_report(records, str(path), config)
        summary = harness.summarize(records)
        ops = sorted(r.decode_ops for r in records)[len(records) // 2]
        print(f"{b:>5} {records[0].m_total:>10} {ops:>12} {summary.rate:>8.2f}")


if __name__ == "__main__":
    main()
