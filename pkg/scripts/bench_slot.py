"""Per-slot decision time of each algorithm on the default 6x8, five-level setup."""

import argparse
import time

import numpy as np

from tilestream.config import Config
from tilestream.controller import ALGORITHMS, SystemState
from tilestream.model import chunk_pair, synthesize_metadata
from tilestream.vpts import Pose, Rotation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--slots", type=int, default=50)
    ap.add_argument("--bandwidth", type=float, default=7.0)
    args = ap.parse_args()

    meta = synthesize_metadata(2, 6, 8, 5, seed=0)
    now, nxt = chunk_pair(meta, 0)
    rng = np.random.default_rng(0)
    states = [
        SystemState(
            float(rng.uniform(0.4, 0.9)),
            float(rng.uniform(0, 0.5)),
            Pose(float(rng.uniform(0, 360)), float(rng.uniform(-60, 60))),
            Rotation(float(rng.uniform(-90, 90)), float(rng.uniform(-40, 40))),
        )
        for _ in range(args.slots)
    ]
    config = Config()
    for name, step in ALGORITHMS.items():
        t0 = time.perf_counter()
        for s in states:
            step(s, now, nxt, args.bandwidth, config, grid=meta.grid)
        dt = (time.perf_counter() - t0) / len(states)
        print(f"{name:>9}: {dt * 1e3:8.2f} ms/slot")


if __name__ == "__main__":
    main()
