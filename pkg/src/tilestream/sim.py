"""Trace handling, the slot-by-slot simulation loop, reports and sweeps."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import Config, ValidationError
from .controller import ALGORITHMS, INFEASIBLE, SystemState
from .model import VideoMeta, chunk_pair, synthesize_metadata
from .queues import SICKNESS_OVERFLOW, STALL, update_packet_queue, update_sickness_queue
from .vpts import Pose, Rotation

log = logging.getLogger(__name__)

SIMPLIFIED_BASELINES = ("greedy", "uniform", "probdash")


@dataclass(frozen=True)
class BandwidthTrace:
    mbps: tuple[float, ...]

    def __post_init__(self):
        for k, v in enumerate(self.mbps):
            if not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"bandwidth entry {k} is {v}; entries must be positive")

    def __len__(self):
        return len(self.mbps)

    @property
    def mean(self) -> float:
        return float(np.mean(self.mbps))

    def scaled_to_mean(self, target: float) -> "BandwidthTrace":
        if target <= 0:
            raise ValidationError("target mean bandwidth must be positive")
        factor = target / self.mean
        return BandwidthTrace(tuple(v * factor for v in self.mbps))


def load_bandwidth_trace(path, scale_to_mean: Optional[float] = None) -> BandwidthTrace:
    """Read a ``second,mbps`` CSV (header optional)."""
    values = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if lineno == 1 and row[0].strip().lower() == "second":
                continue
            if len(row) < 2:
                raise ValidationError(f"{path}:{lineno}: expected 'second,mbps'")
            try:
                v = float(row[1])
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: bad bandwidth value {row[1]!r}") from None
            if not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"{path}:{lineno}: bandwidth must be positive, got {row[1].strip()}")
            values.append(v)
    if not values:
        raise ValidationError(f"{path}: empty bandwidth trace")
    trace = BandwidthTrace(tuple(values))
    return trace.scaled_to_mean(scale_to_mean) if scale_to_mean else trace


def save_bandwidth_trace(trace: BandwidthTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["second", "mbps"])
        for t, v in enumerate(trace.mbps):
            w.writerow([t, repr(v)])


def synthesize_bandwidth_trace(mean_mbps: float, length: int, seed: int = 0) -> BandwidthTrace:
    """Mobile-like trace: log-normal AR(1) fluctuation with occasional fades, scaled to the mean."""
    if length < 1:
        raise ValidationError("trace length must be >= 1")
    rng = np.random.default_rng(seed)
    x = np.empty(length)
    level = rng.normal(0, 0.4)
    for t in range(length):
        level = 0.85 * level + rng.normal(0, 0.25)
        x[t] = level
    fades = rng.random(length) < 0.03
    x[fades] -= 1.2
    bw = np.exp(x)
    bw *= mean_mbps / bw.mean()
    bw = np.maximum(bw, 0.05 * mean_mbps)
    bw *= mean_mbps / bw.mean()
    return BandwidthTrace(tuple(float(v) for v in bw))


def _shortest_arc(delta: float) -> float:
    return (delta + 180.0) % 360.0 - 180.0


@dataclass(frozen=True)
class HeadTrace:
    poses: tuple[Pose, ...]
    dt: float = 1.0

    def __len__(self):
        return len(self.poses)

    def rotation(self, t: int) -> Rotation:
        """Backward finite difference at sample ``t``; zero at the first sample."""
        if t == 0:
            return Rotation(0.0, 0.0)
        a, b = self.poses[t - 1], self.poses[t]
        return Rotation(_shortest_arc(b.yaw_deg - a.yaw_deg) / self.dt, (b.pitch_deg - a.pitch_deg) / self.dt)

    def rotations(self) -> list[Rotation]:
        return [self.rotation(t) for t in range(len(self.poses))]


def load_head_trace(path) -> HeadTrace:
    """Read a ``second,yaw_deg,pitch_deg`` CSV (header optional)."""
    poses = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if lineno == 1 and row[0].strip().lower() == "second":
                continue
            try:
                yaw, pitch = float(row[1]), float(row[2])
            except (IndexError, ValueError):
                raise ValidationError(f"{path}:{lineno}: expected 'second,yaw_deg,pitch_deg'") from None
            if not -90.0 <= pitch <= 90.0:
                raise ValidationError(f"{path}:{lineno}: pitch {pitch} outside [-90, 90]")
            poses.append(Pose(yaw, pitch))
    if not poses:
        raise ValidationError(f"{path}: empty head trace")
    return HeadTrace(tuple(poses))


def save_head_trace(trace: HeadTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["second", "yaw_deg", "pitch_deg"])
        for t, p in enumerate(trace.poses):
            w.writerow([t, repr(p.yaw_deg), repr(p.pitch_deg)])


HEAD_MODELS = ("static", "sinusoid", "random-walk")


def synthesize_head_trace(model: str, length: int, seed: int = 0, **params) -> HeadTrace:
    """Synthetic head motion sampled once per second.

    static: ``yaw0``, ``pitch0``.
    sinusoid: ``amplitude`` and ``period`` for yaw, ``pitch_amplitude`` and
    ``pitch_period`` for pitch.
    random-walk: angular velocities follow a damped random walk with step
    ``speed_std`` (deg/s) and are clipped to ``max_speed`` on each axis
    (default 100 deg/s), pitch is pulled back toward the horizon.
    """
    if length < 1:
        raise ValidationError("trace length must be >= 1")
    yaw0 = float(params.get("yaw0", 0.0))
    pitch0 = float(params.get("pitch0", 0.0))
    t = np.arange(length, dtype=float)
    if model == "static":
        yaw = np.full(length, yaw0)
        pitch = np.full(length, pitch0)
    elif model == "sinusoid":
        A = float(params.get("amplitude", 60.0))
        P = float(params.get("period", 30.0))
        Ap = float(params.get("pitch_amplitude", 0.0))
        Pp = float(params.get("pitch_period", P))
        yaw = yaw0 + A * np.sin(2 * np.pi * t / P)
        pitch = pitch0 + Ap * np.sin(2 * np.pi * t / Pp)
    elif model == "random-walk":
        rng = np.random.default_rng(seed)
        vmax = float(params.get("max_speed", 100.0))
        std = float(params.get("speed_std", 12.0))
        yaw = np.empty(length)
        pitch = np.empty(length)
        y, p, wy, wp = yaw0, pitch0, 0.0, 0.0
        for k in range(length):
            yaw[k], pitch[k] = y, p
            wy = float(np.clip(0.8 * wy + rng.normal(0, std), -vmax, vmax))
            wp = float(np.clip(0.6 * wp - 0.1 * p + rng.normal(0, std / 2), -vmax, vmax))
            y = y + wy
            p = float(np.clip(p + wp, -90.0, 90.0))
    else:
        raise ValidationError(f"unknown head model {model!r}; expected one of {HEAD_MODELS}")
    return HeadTrace(tuple(Pose(a, b) for a, b in zip(yaw, pitch)))


@dataclass(frozen=True)
class SlotReport:
    t: int
    chunk: int
    bandwidth_mbps: float
    s_fov: float
    y_dof: int
    n_tiles: int
    level_histogram: tuple[int, ...]
    mean_level: float
    total_bitrate_mbit: float
    budget_units: int
    distortion: float
    phi: float
    qp: float
    qs: float
    weighted_ssim: float
    expected_flow: float
    total_cost: float
    events: tuple[str, ...] = ()


@dataclass
class RunReport:
    algo: str
    seed: Optional[int]
    config: dict
    slots: list[SlotReport] = field(default_factory=list)
    inputs: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return f"{self.algo} (simplified baseline)" if self.algo in SIMPLIFIED_BASELINES else self.algo

    def aggregates(self) -> dict:
        s = self.slots
        events = Counter(e for r in s for e in r.events)
        n = len(s)

        def mean(attr):
            return float(np.mean([getattr(r, attr) for r in s])) if s else 0.0

        return {
            "n_slots": n,
            "total_cost_sum": float(sum(r.total_cost for r in s)),
            "mean_total_cost": mean("total_cost"),
            "mean_phi": mean("phi"),
            "mean_distortion": mean("distortion"),
            "mean_weighted_ssim": mean("weighted_ssim"),
            "mean_expected_flow": mean("expected_flow"),
            "mean_bitrate_mbit": mean("total_bitrate_mbit"),
            "mean_level": mean("mean_level"),
            "mean_s_fov": mean("s_fov"),
            "dof_fraction": mean("y_dof"),
            "mean_qp": mean("qp"),
            "mean_qs": mean("qs"),
            "final_qp": s[-1].qp if s else None,
            "final_qs": s[-1].qs if s else None,
            "stall_events": events[STALL],
            "sickness_overflow_events": events[SICKNESS_OVERFLOW],
            "infeasible_events": events[INFEASIBLE],
        }

    def summary(self) -> dict:
        return {
            "algo": self.algo,
            "label": self.label,
            "seed": self.seed,
            "inputs": self.inputs,
            "config": self.config,
            "aggregates": self.aggregates(),
        }


SLOT_FIELDS = [f for f in SlotReport.__dataclass_fields__]


def write_outputs(report: RunReport, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "slots.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SLOT_FIELDS)
        for r in report.slots:
            row = asdict(r)
            row["level_histogram"] = ";".join(str(c) for c in r.level_histogram)
            row["events"] = ";".join(r.events)
            w.writerow([repr(v) if isinstance(v, float) else v for v in (row[k] for k in SLOT_FIELDS)])
    (out / "summary.json").write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")


def run_simulation(
    meta: VideoMeta,
    bandwidth: BandwidthTrace,
    head: HeadTrace,
    config: Config,
    algo: str = "etscaa",
    duration_slots: Optional[int] = None,
    seed: Optional[int] = None,
    inputs: Optional[dict] = None,
) -> RunReport:
    """Advance the queues slot by slot under the chosen algorithm.

    At slot ``t`` the algorithm sees the pose and rotation at ``t`` and the
    bandwidth ``B_t``, and decides the chunk played next; the packet queue is
    then charged the committed megabits and the sickness queue the committed
    expected flow.
    """
    if algo not in ALGORITHMS:
        raise ValidationError(f"unknown algorithm {algo!r}; expected one of {sorted(ALGORITHMS)}")
    step = ALGORITHMS[algo]
    n = duration_slots if duration_slots is not None else min(len(bandwidth), len(head))
    if n < 1:
        raise ValidationError("duration must be at least one slot")
    if len(bandwidth) < n:
        raise ValidationError(f"bandwidth trace has {len(bandwidth)} samples, run needs {n}")
    if len(head) < n:
        raise ValidationError(f"head trace has {len(head)} samples, run needs {n}")
    if n > len(meta.chunks):
        log.warning("video has %d chunks; recycling them for a %d-slot run", len(meta.chunks), n)

    T = meta.chunk_duration_T
    report = RunReport(algo, seed, config.to_dict(), inputs=dict(inputs or {}))
    qp, qs, gamma = config.qp_init, config.qs_init, config.gamma_init
    L = meta.n_levels
    for t in range(n):
        chunk, nxt = chunk_pair(meta, t)
        rot = head.rotation(t)
        Bt = bandwidth.mbps[t]
        state = SystemState(qp, qs, head.poses[t], rot, gamma)
        d = step(state, chunk, nxt, Bt, config, grid=meta.grid, T=T)
        ev = d.evaluation
        events = list(d.events)
        qp_up = update_packet_queue(qp, T, config.cp_seconds, d.s_fov, d.y_dof, config.k_dof, ev.total_bitrate, Bt)
        qs_up = update_sickness_queue(
            qs, rot.omega_y_deg_s, rot.omega_p_deg_s, ev.expected_flow, d.s_fov, d.y_dof, config.k_dof, config.cs, config.omega
        )
        events += [e for e in (qp_up.event, qs_up.event) if e]
        qp, qs, gamma = qp_up.value, qs_up.value, ev.total_bitrate
        levels = d.assignment.levels
        hist = [0] * L
        for j in levels:
            hist[j - 1] += 1
        report.slots.append(
            SlotReport(
                t=t,
                chunk=t % len(meta.chunks) + 1,
                bandwidth_mbps=float(Bt),
                s_fov=float(d.s_fov),
                y_dof=int(d.y_dof),
                n_tiles=len(levels),
                level_histogram=tuple(hist),
                mean_level=float(np.mean(levels)),
                total_bitrate_mbit=float(ev.total_bitrate),
                budget_units=int(d.budget_units),
                distortion=float(ev.distortion),
                phi=float(ev.phi),
                qp=float(qp),
                qs=float(qs),
                weighted_ssim=float(ev.weighted_ssim),
                expected_flow=float(ev.expected_flow),
                total_cost=float(config.xi * ev.phi + config.rho * qs),
                events=tuple(events),
            )
        )
    return report


@dataclass(frozen=True)
class SweepRow:
    algo: str
    bandwidth_mean: float
    seed: int
    final_qs: float
    mean_qs: float
    mean_weighted_ssim: float
    mean_total_cost: float
    mean_phi: float
    stall_events: int


def sweep_instance(seed: int, bandwidth_mean: float, slots: int, chunks: int = 60, rows: int = 6, cols: int = 8, levels: int = 5):
    """Inputs for one (seed, bandwidth mean) cell of a sweep."""
    meta = synthesize_metadata(chunks, rows, cols, levels, seed=seed)
    bw = synthesize_bandwidth_trace(bandwidth_mean, slots, seed=10_000 + seed)
    head = synthesize_head_trace("random-walk", slots, seed=20_000 + seed)
    return meta, bw, head


def run_sweep(
    bandwidth_means: Sequence[float],
    algos: Sequence[str],
    seeds: Sequence[int],
    slots: int,
    config: Optional[Config] = None,
    chunks: int = 60,
) -> list[SweepRow]:
    """Every (algorithm, bandwidth mean, seed) combination on synthetic inputs."""
    config = config or Config()
    rows = []
    for seed in seeds:
        for m in bandwidth_means:
            meta, bw, head = sweep_instance(seed, m, slots, chunks)
            for algo in algos:
                agg = run_simulation(meta, bw, head, config, algo, slots, seed).aggregates()
                rows.append(
                    SweepRow(
                        algo,
                        float(m),
                        int(seed),
                        agg["final_qs"],
                        agg["mean_qs"],
                        agg["mean_weighted_ssim"],
                        agg["mean_total_cost"],
                        agg["mean_phi"],
                        agg["stall_events"],
                    )
                )
    return rows


def summarize_sweep(rows: Sequence[SweepRow]) -> dict:
    """Per-algorithm and per-(algorithm, mean) averages."""
    out: dict = {"by_algo": {}, "by_algo_and_mean": {}}
    for algo in sorted({r.algo for r in rows}):
        sel = [r for r in rows if r.algo == algo]
        out["by_algo"][algo] = {
            "final_qs": float(np.mean([r.final_qs for r in sel])),
            "mean_weighted_ssim": float(np.mean([r.mean_weighted_ssim for r in sel])),
            "mean_total_cost": float(np.mean([r.mean_total_cost for r in sel])),
            "runs": len(sel),
        }
        for m in sorted({r.bandwidth_mean for r in sel}):
            cell = [r for r in sel if r.bandwidth_mean == m]
            out["by_algo_and_mean"][f"{algo}@{m:g}"] = {
                "final_qs": float(np.mean([r.final_qs for r in cell])),
                "mean_weighted_ssim": float(np.mean([r.mean_weighted_ssim for r in cell])),
                "mean_total_cost": float(np.mean([r.mean_total_cost for r in cell])),
            }
    return out
