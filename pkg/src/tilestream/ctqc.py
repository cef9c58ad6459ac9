"""Local search over quality assignments guided by the sickness migration indicator.

The search walks from the dynamic-programming assignment through +-1 single
tile moves, keeps a bounded FIFO of recently visited centers (the neighbor
search list) and remembers the best assignment seen.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import ChunkMeta
from .tqa import Assignment, assignment_cost

SMI_RTOL = 1e-12


class NeighborSearchList:
    """Bounded FIFO of assignment fingerprints; the oldest entry is evicted when full."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._order: deque = deque()
        self._members: set = set()

    def insert(self, fingerprint) -> None:
        if fingerprint in self._members:
            return
        if len(self._order) == self.capacity:
            self._members.discard(self._order.popleft())
        self._order.append(fingerprint)
        self._members.add(fingerprint)

    def __contains__(self, fingerprint) -> bool:
        return fingerprint in self._members

    def __len__(self) -> int:
        return len(self._order)

    def entries(self) -> list:
        return list(self._order)


def smi_table(tiles, qs_prev: float, chunk_t: ChunkMeta, chunk_next: ChunkMeta, vli) -> np.ndarray:
    """Per-(tile, level) SMI contribution; ``vli`` is aligned with ``tiles``."""
    idx = np.asarray(tiles, dtype=int) - 1
    return qs_prev * (chunk_next.flow[idx] - chunk_t.flow[idx]) + np.asarray(vli, dtype=float)


def compute_smi(assignment: Assignment, qs_prev: float, chunk_t: ChunkMeta, chunk_next: ChunkMeta, vli) -> float:
    """Sum over the assignment of ``qs_prev * (f(t+1) - f(t)) + VLI``."""
    total = 0.0
    for k, (i, j) in enumerate(zip(assignment.tiles, assignment.levels)):
        total += qs_prev * (chunk_next.flow[i - 1, j - 1] - chunk_t.flow[i - 1, j - 1]) + vli[k][j - 1]
    return float(total)


def neighbors(levels: tuple[int, ...], budget: int, L: int, units) -> list[tuple[int, ...]]:
    """Level vectors one +-1 step away on a single tile, within [1, L] and the budget.

    Ordered by tile position, with the -1 move before the +1 move.
    """
    units = np.asarray(units)
    used = sum(int(units[k, j - 1]) for k, j in enumerate(levels))
    out = []
    for k, j in enumerate(levels):
        for step in (-1, 1):
            nj = j + step
            if not 1 <= nj <= L:
                continue
            if used - int(units[k, j - 1]) + int(units[k, nj - 1]) > budget:
                continue
            out.append(levels[:k] + (nj,) + levels[k + 1 :])
    return out


@dataclass(frozen=True)
class SearchOutcome:
    assignment: Assignment
    smi: float
    iterations: int
    reason: str  # "alpha", "stuck", "cap"


def local_search(
    initial: Assignment,
    budget: int,
    units,
    smi_tab,
    alpha: int = 10,
    nsl_capacity: int = 20,
    max_iterations: int = 200,
    costs=None,
    path: Optional[list] = None,
) -> SearchOutcome:
    """Walk from ``initial`` to the best non-listed neighbor each iteration.

    Neighbors are scored incrementally from the center's SMI. A level vector
    counts as examined each time it is scored; the walk stops once any vector
    has been examined ``alpha`` times, when every neighbor is listed, or at
    ``max_iterations``. If ``path`` is given, every center visited, starting
    with ``initial``, is appended to it as a level tuple.
    """
    g = np.asarray(smi_tab, dtype=float)
    n, L = g.shape
    gl = g.tolist()
    ul = np.asarray(units).tolist()
    # level vectors packed into ints (base L + 1) for cheap list membership
    radix = [(L + 1) ** k for k in range(n)]

    def full_smi(levels):
        return sum(gl[k][j - 1] for k, j in enumerate(levels))

    levels = list(initial.levels)
    key = sum(j * r for j, r in zip(levels, radix))
    used = sum(ul[k][j - 1] for k, j in enumerate(levels))
    cur_smi = full_smi(levels)
    best_levels, best_smi = tuple(levels), cur_smi

    nsl = NeighborSearchList(nsl_capacity)
    nsl.insert(key)
    if path is not None:
        path.append(tuple(levels))
    listed = nsl._members
    examined = {key: 1}
    top_count = 1
    reason = "cap"
    it = 0
    while it < max_iterations:
        it += 1
        pick = None  # (smi, tile position, new level, new key, new used)
        for k in range(n):
            j = levels[k]
            uk, gk = ul[k], gl[k]
            rest_used = used - uk[j - 1]
            rest_smi = cur_smi - gk[j - 1]
            for nj, nkey in ((j - 1, key - radix[k]), (j + 1, key + radix[k])):
                if nj < 1 or nj > L or rest_used + uk[nj - 1] > budget or nkey in listed:
                    continue
                c = examined.get(nkey, 0) + 1
                examined[nkey] = c
                if c > top_count:
                    top_count = c
                s = rest_smi + gk[nj - 1]
                if pick is None or s < pick[0]:
                    pick = (s, k, nj, nkey, rest_used + uk[nj - 1])
        if pick is None:
            reason = "stuck"
            break
        cur_smi, k, nj, key, used = pick
        levels[k] = nj
        nsl.insert(key)
        if path is not None:
            path.append(tuple(levels))
        if cur_smi < best_smi - SMI_RTOL * max(1.0, abs(best_smi)):
            # re-sum so the incumbent's score carries no incremental drift
            cur_smi = full_smi(levels)
            if cur_smi < best_smi:
                best_levels, best_smi = tuple(levels), cur_smi
        if top_count >= alpha:
            reason = "alpha"
            break

    best_used = sum(ul[k][j - 1] for k, j in enumerate(best_levels))
    cost = assignment_cost(costs, best_levels) if costs is not None else initial.total_cost
    result = Assignment(initial.tiles, best_levels, int(best_used), cost)
    return SearchOutcome(result, float(best_smi), it, reason)


def refine(
    initial: Assignment,
    budget: int,
    units,
    smi_tab,
    alpha: int = 10,
    nsl_capacity: int = 20,
    max_iterations: int = 200,
    costs=None,
) -> Assignment:
    """Best assignment found by the SMI-guided walk; never worse than ``initial``."""
    return local_search(initial, budget, units, smi_tab, alpha, nsl_capacity, max_iterations, costs).assignment


def refine_for_chunk(
    initial: Assignment,
    budget: int,
    units,
    qs_prev: float,
    chunk_t: ChunkMeta,
    chunk_next: ChunkMeta,
    vli,
    alpha: int = 10,
    nsl_capacity: int = 20,
    max_iterations: int = 200,
    costs: Optional[np.ndarray] = None,
) -> Assignment:
    tab = smi_table(initial.tiles, qs_prev, chunk_t, chunk_next, vli)
    return refine(initial, budget, units, tab, alpha, nsl_capacity, max_iterations, costs)
