"""Final sickness occupancy and SSIM of each algorithm across bandwidth means.

Prints one row per (algorithm, bandwidth mean) plus an overall row, together
with how often the controller used FoV shrinking or blur.

    python3 scripts/sickness_sweep.py --seeds 20 --slots 20
    python3 scripts/sickness_sweep.py --cs 20 --slots 60   # smaller sickness capacity
"""

import argparse
from collections import defaultdict

import numpy as np

from tilestream.config import Config
from tilestream.sim import run_simulation, sweep_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--means", default="3,5,7,9,11")
    ap.add_argument("--algos", default="etscaa,greedy,uniform,probdash")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--slots", type=int, default=20)
    ap.add_argument("--cs", type=float, default=None)
    ap.add_argument("--rho", type=float, default=None)
    args = ap.parse_args()

    overrides = {k: v for k, v in (("cs", args.cs), ("rho", args.rho)) if v is not None}
    config = Config(**overrides)
    means = [float(m) for m in args.means.split(",")]
    algos = args.algos.split(",")
    cells = defaultdict(list)
    for seed in range(args.seeds):
        for m in means:
            meta, bw, head = sweep_instance(seed, m, args.slots, chunks=args.slots)
            for algo in algos:
                agg = run_simulation(meta, bw, head, config, algo, args.slots, seed).aggregates()
                cells[algo, m].append(agg)

    cols = ("final_qs", "mean_weighted_ssim", "mean_s_fov", "dof_fraction", "stall_events")
    print(f"{'algo':>9} {'mean':>5} " + " ".join(f"{c:>18}" for c in cols))
    for algo in algos:
        for m in means + [None]:
            rows = [a for (al, mm), v in cells.items() if al == algo and (m is None or mm == m) for a in v]
            vals = [np.mean([r[c] for r in rows]) for c in cols]
            label = "all" if m is None else f"{m:g}"
            print(f"{algo:>9} {label:>5} " + " ".join(f"{v:>18.5f}" for v in vals))
    base = np.mean([a["final_qs"] for (al, _), v in cells.items() if al == "greedy" for a in v]) if "greedy" in algos else None
    if base:
        for algo in algos:
            qs = np.mean([a["final_qs"] for (al, _), v in cells.items() if al == algo for a in v])
            print(f"{algo:>9}: final Q^S {1 - qs / base:+.1%} vs greedy")


if __name__ == "__main__":
    main()
