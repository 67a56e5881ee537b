#!/usr/bin/env python3
"""Sweep Eb/N0 for every decoder/combining pairing and write one CSV.

    python3 scripts/ber_curves.py --ebno 0 2 4 6 --min-errors 100 --out curves.csv
"""
import argparse
import itertools
import sys
import time

from multibeam.cli import records_to_csv, summary_line
from multibeam.montecarlo import Scenario, StopRule, sweep, with_detector


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--ebno", type=float, nargs="+", default=[0, 2, 4, 6])
    p.add_argument("--decoders", nargs="+", default=["viterbi", "bcjr"])
    p.add_argument("--stages", type=int, default=3)
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--max-frames", type=int, default=20000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="ber_curves.csv")
    args = p.parse_args(argv)

    base = Scenario(seed=args.seed)
    stop = StopRule(args.min_errors, args.max_frames)
    records = []
    for decoder, combining in itertools.product(args.decoders, (False, True)):
        sc = with_detector(base, decoder=decoder, combining=combining, stages=args.stages)
        t0 = time.perf_counter()
        records += sweep(sc, args.ebno, stop, args.workers,
                         progress=lambda recs: print(summary_line(recs[-1]), flush=True))
        print(f"  {decoder} combining={combining}: {time.perf_counter() - t0:.0f} s", file=sys.stderr)
    with open(args.out, "w", newline="") as fh:
        fh.write(records_to_csv(records))
    print(f"wrote {len(records)} rows to {args.out}")


if __name__ == "__main__":
    main()
