"""Per-tile cost indicators and the knapsack-style quality assignment."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import ChunkMeta
from .queues import shrink_factor

# Relative slack for treating two float costs as tied.
COST_TIE_RTOL = 1e-9


class InfeasibleAssignment(Exception):
    """No assignment fits the budget, even with every tile at level 1."""

    def __init__(self, budget: int, blocking_tiles: Sequence[int]):
        self.budget = budget
        self.blocking_tiles = tuple(blocking_tiles)
        super().__init__(f"budget {budget} units cannot fit tiles {list(self.blocking_tiles)} at level 1")


@dataclass(frozen=True)
class Assignment:
    """One quality level per fetched tile.

    ``units`` is the quantized bitrate sum used against the budget and
    ``total_cost`` the sum of per-tile costs under which it was chosen.
    """

    tiles: tuple[int, ...]
    levels: tuple[int, ...]
    units: int = 0
    total_cost: float = 0.0

    def __post_init__(self):
        if len(self.tiles) != len(self.levels):
            raise ValueError("tiles and levels differ in length")

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.tiles, self.levels))

    def __len__(self):
        return len(self.tiles)


def compute_ci(f_ij, s_fov, y_dof, k_dof, p_i, sum_p_over_V):
    """Cybersickness indicator: probability-weighted flow, scaled by the shrink factor."""
    if sum_p_over_V <= 0:
        raise ValueError("fetched tiles carry no probability mass")
    return f_ij * shrink_factor(s_fov, y_dof, k_dof) * p_i / sum_p_over_V


def compute_vli(d_ij, s_fov, y_dof, k_dof, p_i, sum_p_over_V):
    """Video loss indicator: probability-weighted distortion, inflated by shrinking."""
    if sum_p_over_V <= 0:
        raise ValueError("fetched tiles carry no probability mass")
    factor = shrink_factor(s_fov, y_dof, k_dof)
    if factor <= 0:
        raise ValueError(f"degenerate shrink factor {factor}")
    return p_i * d_ij / (factor * sum_p_over_V)


def tile_cost_tau(tile, level, s_fov, y_dof, xi, rho, *, chunk: ChunkMeta, p, sum_p, k_dof):
    """Cost of giving ``tile`` quality ``level``; ``p`` is the full per-tile field."""
    t = chunk.tile(tile, level)
    p_i = p[tile - 1]
    return xi * compute_vli(t.distortion_d, s_fov, y_dof, k_dof, p_i, sum_p) + rho * compute_ci(
        t.flow_f, s_fov, y_dof, k_dof, p_i, sum_p
    )


def vli_table(chunk: ChunkMeta, tiles, p, s_fov, y_dof, k_dof) -> np.ndarray:
    """VLI for every (tile in ``tiles``, level), shape (len(tiles), L)."""
    idx = np.asarray(tiles, dtype=int) - 1
    w = np.asarray(p, dtype=float)[idx]
    total = w.sum()
    if total <= 0:
        raise ValueError("fetched tiles carry no probability mass")
    factor = shrink_factor(s_fov, y_dof, k_dof)
    if factor <= 0:
        raise ValueError(f"degenerate shrink factor {factor}")
    return (w / total)[:, None] * chunk.distortion[idx] / factor


def ci_table(chunk: ChunkMeta, tiles, p, s_fov, y_dof, k_dof) -> np.ndarray:
    idx = np.asarray(tiles, dtype=int) - 1
    w = np.asarray(p, dtype=float)[idx]
    total = w.sum()
    if total <= 0:
        raise ValueError("fetched tiles carry no probability mass")
    return (w / total)[:, None] * chunk.flow[idx] * shrink_factor(s_fov, y_dof, k_dof)


def tau_table(chunk: ChunkMeta, tiles, p, s_fov, y_dof, k_dof, xi, rho) -> np.ndarray:
    return xi * vli_table(chunk, tiles, p, s_fov, y_dof, k_dof) + rho * ci_table(chunk, tiles, p, s_fov, y_dof, k_dof)


def quantize(bitrates, bw_unit: float) -> np.ndarray:
    """Round bitrates up to whole ``bw_unit`` steps so budgets are never exceeded."""
    q = np.ceil(np.asarray(bitrates, dtype=float) / bw_unit - 1e-9)
    return np.maximum(q, 0).astype(np.int64)


def _check_tables(tiles, costs, units):
    costs = np.asarray(costs, dtype=float)
    units = np.asarray(units, dtype=np.int64)
    if costs.ndim != 2 or costs.shape != units.shape or costs.shape[0] != len(tiles):
        raise ValueError(f"cost/unit tables must be ({len(tiles)}, L); got {costs.shape}, {units.shape}")
    return costs, units


def _ties(values: np.ndarray, best: np.ndarray) -> np.ndarray:
    return values <= best + COST_TIE_RTOL * np.maximum(1.0, np.abs(best))


def assign_quality_dp(tiles: Sequence[int], budget: int, costs, units) -> Assignment:
    """Minimum-cost assignment of one level per tile within ``budget`` units.

    ``costs[k, j-1]`` and ``units[k, j-1]`` are the cost and quantized bitrate
    of level ``j`` for ``tiles[k]``. Among optimal assignments the level
    vector is lexicographically largest in tile order, i.e. ties go to the
    higher level and earlier tiles are settled first.

    The table is built over tile suffixes, ``M[k][beta]`` being the least cost
    of tiles ``k..n-1`` with ``beta`` units, and ``choice[k][beta]`` records
    the level attaining it; backtracking walks tiles forward.
    """
    tiles = tuple(int(t) for t in tiles)
    costs, units = _check_tables(tiles, costs, units)
    n = len(tiles)
    if n == 0:
        return Assignment((), (), 0, 0.0)
    budget = int(budget)
    min_units = units.min(axis=1)
    if budget < 0 or min_units.sum() > budget:
        blocking = [t for t, m in zip(tiles, min_units) if m > budget] or list(tiles)
        raise InfeasibleAssignment(budget, blocking)

    # budget beyond the all-max fetch buys nothing
    cap = int(min(budget, units.max(axis=1).sum()))
    L = costs.shape[1]
    inf = math.inf
    M = np.zeros(cap + 1)
    choice = np.zeros((n, cap + 1), dtype=np.int16)
    cand = np.empty((L, cap + 1))
    for k in range(n - 1, -1, -1):
        cand.fill(inf)
        for j in range(L):
            u = int(units[k, j])
            if u <= cap:
                cand[j, u:] = M[: cap + 1 - u] + costs[k, j]
        best = cand.min(axis=0)
        tie = _ties(cand, best)
        # highest tied level
        choice[k] = L - 1 - np.argmax(tie[::-1], axis=0)
        M = best

    levels = []
    beta = cap
    total = 0.0
    used = 0
    for k in range(n):
        j = int(choice[k, beta])
        levels.append(j + 1)
        total += costs[k, j]
        used += int(units[k, j])
        beta -= int(units[k, j])
    return Assignment(tiles, tuple(levels), used, float(total))


def assignment_cost(costs, levels) -> float:
    costs = np.asarray(costs, dtype=float)
    return float(sum(costs[k, j - 1] for k, j in enumerate(levels)))


def assignment_units(units, levels) -> int:
    units = np.asarray(units)
    return int(sum(units[k, j - 1] for k, j in enumerate(levels)))
