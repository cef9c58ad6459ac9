"""Brute-force reference solvers for small instances.

Everything here enumerates the full assignment space with numpy and shares no
optimization code with the dynamic program or the local search, so it can be
used to check them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config
from .model import ChunkMeta, TileGrid, VideoMeta
from .tqa import COST_TIE_RTOL, Assignment, InfeasibleAssignment, quantize

ROTATION_NORM = 100.0 * np.sqrt(2.0)


class EnumerationCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleResult:
    best_assignment: Assignment
    best_config: tuple[float, int]
    best_objective: float
    enumeration_count: int


def _all_level_vectors(n: int, L: int, cap: int) -> np.ndarray:
    """Every level vector, rows in lexicographic order, shape (L**n, n), 1-based."""
    if L**n > cap:
        raise EnumerationCapExceeded(f"{L}^{n} = {L**n} assignments exceeds cap {cap}")
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((L,) * n).reshape(n, -1).T
    return grids + 1


def _table_sums(table: np.ndarray, combos: np.ndarray) -> np.ndarray:
    n = combos.shape[1]
    if n == 0:
        return np.zeros(len(combos))
    return table[np.arange(n)[None, :], combos - 1].sum(axis=1)


def exhaustive_assignment(tiles, budget, costs, units, cap: int = 10**7) -> Assignment:
    """Least-cost feasible level vector; ties go to the lexicographically largest."""
    tiles = tuple(int(t) for t in tiles)
    costs = np.asarray(costs, dtype=float)
    units = np.asarray(units, dtype=np.int64)
    n = len(tiles)
    if n == 0:
        return Assignment((), (), 0, 0.0)
    combos = _all_level_vectors(n, costs.shape[1], cap)
    total = _table_sums(costs, combos)
    used = _table_sums(units, combos)
    feasible = used <= budget
    if not feasible.any():
        raise InfeasibleAssignment(budget, list(tiles))
    best = total[feasible].min()
    tied = feasible & (total <= best + COST_TIE_RTOL * max(1.0, abs(best)))
    k = int(np.flatnonzero(tied)[-1])
    return Assignment(tiles, tuple(int(j) for j in combos[k]), int(used[k]), float(total[k]))


def exhaustive_step(state, chunk: ChunkMeta, next_chunk: ChunkMeta, Bt: float, config: Config, *, grid: TileGrid, T: float = 1.0) -> OracleResult:
    """Per-slot optimum of xi * Phi + rho * Q^S over every setting and assignment.

    Uses the same fetched tile set and viewing probabilities as the online
    controller; only the choice of levels and intervention is enumerated.
    """
    from .controller import predict_fetch_set

    p, fetch = predict_fetch_set(state, grid, config, T)
    tiles = fetch.tiles
    idx = np.asarray(tiles) - 1
    n, L = len(tiles), chunk.n_levels
    n_configs = len(config.sfov_ladder) * len(config.dof_choices)
    if n_configs * L**n > config.enumeration_cap:
        raise EnumerationCapExceeded(f"{n_configs} * {L}^{n} exceeds cap {config.enumeration_cap}")
    combos = _all_level_vectors(n, L, config.enumeration_cap)
    w = p[idx] / p[idx].sum()
    D = _table_sums(chunk.distortion[idx] * w[:, None], combos)
    flow = _table_sums(chunk.flow[idx] * w[:, None], combos)
    units = quantize(chunk.bitrate[idx], config.bw_unit)
    used = _table_sums(units, combos)
    rot = np.hypot(state.rotation.omega_y_deg_s, state.rotation.omega_p_deg_s) / ROTATION_NORM

    best = None
    count = 0
    for s in config.sfov_ladder:
        for y in sorted(config.dof_choices):
            count += len(combos)
            factor = s * (1.0 - config.k_dof * y)
            raw_budget = Bt * (config.cp_seconds * (state.qp - config.lambda_target) + T) / (factor * T)
            budget = max(0, int(np.floor(raw_budget / config.bw_unit + 0.5)))
            feasible = used <= budget
            if not feasible.any():
                continue
            qs = np.clip(state.qs + ((rot + flow) * factor - config.omega) / config.cs, 0.0, 1.0)
            obj = config.xi * D / factor + config.rho * qs
            obj = np.where(feasible, obj, np.inf)
            k = int(np.argmin(obj))
            if best is None or obj[k] < best[0]:
                levels = tuple(int(j) for j in combos[k])
                best = (float(obj[k]), (s, y), Assignment(tiles, levels, int(used[k]), 0.0))
    if best is None:
        raise InfeasibleAssignment(0, list(tiles))
    return OracleResult(best[2], best[1], best[0], count)


def competitive_bound(chunk: ChunkMeta, tiles, config: Config) -> float:
    """1 / (s_min (1 - k_dof) r), r being the smallest SSIM among the instance's tiles."""
    idx = np.asarray(tiles) - 1
    r = float((1.0 / chunk.distortion[idx]).min())
    return 1.0 / (min(config.sfov_ladder) * (1.0 - config.k_dof) * r)


# Random small instances shared by the test suite and the ``verify`` command.


def random_dp_instance(rng: np.random.Generator, max_tiles=6, max_levels=4, max_budget=30):
    n = int(rng.integers(1, max_tiles + 1))
    L = int(rng.integers(1, max_levels + 1))
    tiles = tuple(sorted(rng.choice(np.arange(1, 49), size=n, replace=False).tolist()))
    steps = rng.integers(0, 4, size=(n, L))
    steps[:, 0] = rng.integers(0, 4, size=n)
    units = np.cumsum(steps, axis=1)
    # coarse cost grid makes exact ties common, which exercises tie-breaking
    costs = rng.integers(0, 12, size=(n, L)).astype(float) * 0.5
    budget = int(rng.integers(0, max_budget + 1))
    return tiles, budget, costs, units


def random_slot_instance(rng: np.random.Generator, chunks: int = 2):
    """A small grid, narrow viewport and short ladder so enumeration stays cheap."""
    from .controller import SystemState
    from .model import synthesize_metadata
    from .vpts import Pose, Rotation

    rows, cols = int(rng.integers(2, 5)), int(rng.integers(3, 7))
    L = int(rng.integers(2, 5))
    meta: VideoMeta = synthesize_metadata(chunks, rows, cols, L, seed=int(rng.integers(0, 2**31)))
    grid = meta.grid
    config = Config(
        viewport_w_deg=float(rng.uniform(0.3, 1.2) * grid.tile_width_deg),
        viewport_h_deg=float(rng.uniform(0.3, 1.2) * grid.tile_height_deg),
        sigma_y_deg=float(rng.uniform(0, 6)),
        sigma_p_deg=float(rng.uniform(0, 6)),
        sfov_ladder=(1.0, 0.85, 0.7),
        bw_unit=0.01,
        cs=float(rng.choice([10.0, 100.0, 1000.0])),
        omega=float(rng.uniform(0, 0.3)),
        xi=float(rng.uniform(0.2, 2.0)),
        rho=float(rng.uniform(0, 5.0)),
    )
    state = SystemState(
        qp=float(rng.uniform(0.4, 1.0)),
        qs=float(rng.uniform(0, 1.0)),
        pose=Pose(float(rng.uniform(0, 360)), float(rng.uniform(-80, 80))),
        rotation=Rotation(float(rng.uniform(-100, 100)), float(rng.uniform(-50, 50))),
    )
    # bandwidth around what the fetched region costs at mid quality
    mid = float(np.median(meta.chunks[0].bitrate[:, L // 2]))
    Bt = float(rng.uniform(0.5, 6.0) * mid)
    return state, meta, Bt, config
