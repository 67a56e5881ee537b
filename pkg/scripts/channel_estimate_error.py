#!/usr/bin/env python3
"""Compare the correlation and least-squares channel estimators on noiseless reference frames.

Both estimators see the true transmitted rows (perfect feedback), so the only
error source is cross-correlation between users' symbol streams.
"""
import argparse

import numpy as np

from multibeam.channel import transmit
from multibeam.montecarlo import Scenario, frame_rng, simulate_frame
from multibeam.receiver import estimate_channel, estimate_channel_ls


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--threshold", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    sc = Scenario(seed=args.seed)
    worst = {"correlation": [], "least-squares": []}
    entries = []
    for f in range(args.frames):
        _, H, X, _, _ = simulate_frame(sc, 0.0, f, return_report=True)
        Y = transmit(H, X, 0.0, frame_rng(args.seed, f))
        for name, fn in (("correlation", estimate_channel), ("least-squares", estimate_channel_ls)):
            err = np.abs(fn(Y, X) - H.h)
            worst[name].append(err.max())
            if name == "correlation":
                entries.append(err.ravel())
    entries = np.concatenate(entries)
    for name, w in worst.items():
        w = np.array(w)
        print(f"{name:>13}: max-entry error mean {w.mean():.3e}, frames under {args.threshold}: "
              f"{100 * np.mean(w < args.threshold):.1f}%")
    print(f"  correlation, per entry: {100 * np.mean(entries < args.threshold):.1f}% under {args.threshold}")


if __name__ == "__main__":
    main()
