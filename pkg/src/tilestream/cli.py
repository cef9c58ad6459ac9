"""Command-line entry point: ``simulate``, ``gen-metadata``, ``sweep``, ``verify``.

Inputs given as ``synthetic:...`` are generated on the fly, e.g.::

    --metadata synthetic:chunks=60,rows=6,cols=8,levels=5,seed=3
    --bandwidth synthetic:mean=6,seed=1
    --head synthetic:random-walk,max_speed=80

Exit status is 0 on success, 2 on invalid input, 1 when ``verify`` finds a
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import Config, ValidationError
from .controller import ALGORITHMS
from .model import load_metadata, save_metadata, synthesize_metadata
from .sim import (
    HEAD_MODELS,
    SweepRow,
    load_bandwidth_trace,
    load_head_trace,
    run_simulation,
    run_sweep,
    summarize_sweep,
    synthesize_bandwidth_trace,
    synthesize_head_trace,
    write_outputs,
)

log = logging.getLogger("tilestream")


def _parse_kv(text: str) -> tuple[list[str], dict[str, str]]:
    pos, kv = [], {}
    for part in filter(None, text.split(",")):
        if "=" in part:
            k, v = part.split("=", 1)
            kv[k.strip().replace("-", "_")] = v.strip()
        else:
            pos.append(part.strip())
    return pos, kv


def _num(v: str):
    try:
        return int(v)
    except ValueError:
        return float(v)


def _synthetic(arg: str):
    if not arg.startswith("synthetic"):
        return None
    _, _, rest = arg.partition(":")
    return _parse_kv(rest)


def metadata_from_arg(arg: str, seed: int):
    syn = _synthetic(arg)
    if syn is None:
        return load_metadata(arg)
    _, kv = syn
    params = {"chunks": 60, "rows": 6, "cols": 8, "levels": 5, "seed": seed}
    params.update({k: _num(v) for k, v in kv.items()})
    return synthesize_metadata(**params)


def bandwidth_from_arg(arg: str, slots: int, seed: int, scale_mean):
    syn = _synthetic(arg)
    if syn is None:
        return load_bandwidth_trace(arg, scale_mean)
    _, kv = syn
    mean = float(kv.get("mean", scale_mean or 6.0))
    trace = synthesize_bandwidth_trace(mean, int(kv.get("length", slots)), int(kv.get("seed", seed)))
    return trace.scaled_to_mean(scale_mean) if scale_mean else trace


def head_from_arg(arg: str, slots: int, seed: int):
    syn = _synthetic(arg)
    if syn is None:
        return load_head_trace(arg)
    pos, kv = syn
    model = pos[0] if pos else "random-walk"
    params = {k: float(v) for k, v in kv.items() if k not in ("seed", "length")}
    return synthesize_head_trace(model, int(kv.get("length", slots)), int(kv.get("seed", seed)), **params)


CONFIG_FLAGS = {
    "xi": "xi",
    "rho": "rho",
    "epsilon": "epsilon",
    "alpha": "alpha",
    "nsl_size": "nsl_capacity",
    "cp": "cp_seconds",
    "cs": "cs",
    "omega": "omega",
    "lambda_": "lambda_target",
    "kdof": "k_dof",
    "bw_unit": "bw_unit",
    "sigma_y": "sigma_y_deg",
    "sigma_p": "sigma_p_deg",
    "viewport_w": "viewport_w_deg",
    "viewport_h": "viewport_h_deg",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model parameters (defaults follow the simulation setup)")
    g.add_argument("--config", help="JSON file with Config fields; flags below override it")
    g.add_argument("--xi", type=float)
    g.add_argument("--rho", type=float)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--alpha", type=int)
    g.add_argument("--nsl-size", type=int)
    g.add_argument("--cp", type=float, help="packet queue capacity, seconds")
    g.add_argument("--cs", type=float, help="sickness queue capacity")
    g.add_argument("--omega", type=float, help="sickness adaptation rate")
    g.add_argument("--lambda", dest="lambda_", type=float, help="target packet queue occupancy")
    g.add_argument("--kdof", type=float)
    g.add_argument("--bw-unit", type=float, help="DP bandwidth granularity, megabits")
    g.add_argument("--sigma-y", type=float)
    g.add_argument("--sigma-p", type=float)
    g.add_argument("--viewport-w", type=float)
    g.add_argument("--viewport-h", type=float)
    g.add_argument("--sfov-ladder", help="comma-separated descending s_fov values")
    g.add_argument("--no-dof", action="store_true", help="never activate DoF simulation")


def config_from_args(args) -> Config:
    fields = {}
    if args.config:
        fields.update(json.loads(Path(args.config).read_text()))
    for flag, name in CONFIG_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            fields[name] = v
    if args.sfov_ladder:
        fields["sfov_ladder"] = tuple(float(x) for x in args.sfov_ladder.split(","))
    if args.no_dof:
        fields["dof_choices"] = (0,)
    return Config.from_dict(fields)


def cmd_simulate(args) -> int:
    config = config_from_args(args)
    meta = metadata_from_arg(args.metadata, args.seed)
    slots = args.slots
    bw = bandwidth_from_arg(args.bandwidth, slots, args.seed, args.scale_bandwidth_mean)
    head = head_from_arg(args.head, slots, args.seed)
    inputs = {
        "metadata": args.metadata,
        "bandwidth": args.bandwidth,
        "head": args.head,
        "scale_bandwidth_mean": args.scale_bandwidth_mean,
        "slots": slots,
    }
    report = run_simulation(meta, bw, head, config, args.algo, slots, args.seed, inputs)
    write_outputs(report, args.out)
    agg = report.aggregates()
    print(
        f"{report.label}: {agg['n_slots']} slots, mean cost {agg['mean_total_cost']:.4f}, "
        f"final Q^S {agg['final_qs']:.5f}, mean SSIM {agg['mean_weighted_ssim']:.4f}, "
        f"stalls {agg['stall_events']} -> {args.out}"
    )
    return 0


def cmd_gen_metadata(args) -> int:
    meta = synthesize_metadata(args.chunks, args.rows, args.cols, args.levels, args.seed, args.chunk_duration)
    save_metadata(meta, args.out)
    print(f"wrote {len(meta)} chunks x {meta.n_tiles} tiles x {meta.n_levels} levels to {args.out}")
    return 0


def _parse_means(text: str) -> list[float]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        step = 1.0
        if ":" in hi:
            hi, step = hi.split(":")
        return [float(x) for x in np.arange(float(lo), float(hi) + 1e-9, float(step))]
    return [float(x) for x in text.split(",")]


def cmd_sweep(args) -> int:
    config = config_from_args(args)
    means = _parse_means(args.bandwidth_means)
    algos = [a.strip() for a in args.algos.split(",")]
    for a in algos:
        if a not in ALGORITHMS:
            raise ValidationError(f"unknown algorithm {a!r}")
    seeds = list(range(args.seed, args.seed + args.seeds))
    rows = run_sweep(means, algos, seeds, args.slots, config, args.chunks)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = list(SweepRow.__dataclass_fields__)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for r in rows:
            w.writerow([getattr(r, k) for k in names])
    summary = summarize_sweep(rows)
    summary["config"] = config.to_dict()
    summary["bandwidth_means"] = means
    summary["seeds"] = seeds
    (out / "sweep_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for algo, s in summary["by_algo"].items():
        print(f"{algo:>9}: final Q^S {s['final_qs']:.5f}  SSIM {s['mean_weighted_ssim']:.4f}  cost {s['mean_total_cost']:.4f}")
    return 0


def cmd_verify(args) -> int:
    from . import verify

    ok = verify.run_all(dp_instances=args.dp_instances, slot_instances=args.slot_instances, seed=args.seed)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tilestream", description="Tile-based 360-degree video streaming simulator with a cybersickness-aware controller.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one trace-driven simulation")
    s.add_argument("--metadata", required=True, help="metadata JSON or synthetic:...")
    s.add_argument("--bandwidth", required=True, help="second,mbps CSV or synthetic:mean=M")
    s.add_argument("--head", required=True, help=f"second,yaw_deg,pitch_deg CSV or synthetic:{{{'|'.join(HEAD_MODELS)}}}")
    s.add_argument("--algo", choices=sorted(ALGORITHMS), default="etscaa")
    s.add_argument("--slots", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scale-bandwidth-mean", type=float)
    s.add_argument("--out", required=True)
    _add_config_flags(s)
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gen-metadata", help="write synthetic video metadata")
    g.add_argument("--chunks", type=int, default=60)
    g.add_argument("--rows", type=int, default=6)
    g.add_argument("--cols", type=int, default=8)
    g.add_argument("--levels", type=int, default=5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--chunk-duration", type=float, default=1.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_metadata)

    w = sub.add_parser("sweep", help="algorithms x bandwidth means x seeds on synthetic inputs")
    w.add_argument("--bandwidth-means", default="3..11", help="'lo..hi[:step]' or comma list, Mbps")
    w.add_argument("--algos", default="etscaa,greedy,uniform,probdash")
    w.add_argument("--seeds", type=int, default=5, help="number of seeds")
    w.add_argument("--seed", type=int, default=0, help="first seed")
    w.add_argument("--slots", type=int, default=60)
    w.add_argument("--chunks", type=int, default=60)
    w.add_argument("--out", required=True)
    _add_config_flags(w)
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run the brute-force oracle checks")
    v.add_argument("--dp-instances", type=int, default=1000)
    v.add_argument("--slot-instances", type=int, default=500)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
