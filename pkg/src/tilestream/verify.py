"""Oracle cross-checks shared by the ``verify`` command and the acceptance tests."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .controller import etscaa_step
from .model import chunk_pair
from .oracle import competitive_bound, exhaustive_assignment, exhaustive_step, random_dp_instance, random_slot_instance
from .tqa import InfeasibleAssignment, assign_quality_dp


@dataclass
class CheckResult:
    name: str
    checked: int
    failures: int
    seconds: float
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.failures == 0 and self.checked > 0

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: {self.checked} checked, {self.failures} failures, {self.seconds:.2f}s{extra}"


def check_dp_optimality(n_instances: int = 1000, seed: int = 0) -> CheckResult:
    """DP against exhaustive enumeration: same feasibility, same levels, same cost."""
    rng = np.random.default_rng(seed)
    failures = 0
    t0 = time.perf_counter()
    for _ in range(n_instances):
        tiles, budget, costs, units = random_dp_instance(rng)
        try:
            dp = assign_quality_dp(tiles, budget, costs, units)
        except InfeasibleAssignment:
            dp = None
        try:
            ex = exhaustive_assignment(tiles, budget, costs, units)
        except InfeasibleAssignment:
            ex = None
        if (dp is None) != (ex is None):
            failures += 1
        elif dp is not None and (dp.levels != ex.levels or abs(dp.total_cost - ex.total_cost) > 1e-9):
            failures += 1
    return CheckResult("DP == exhaustive", n_instances, failures, time.perf_counter() - t0)


def check_competitive_bound(n_instances: int = 500, seed: int = 1, max_attempts: int = 5000) -> CheckResult:
    """Per-slot online/offline objective ratio against 1 / (s_min (1 - k_dof) r)."""
    rng = np.random.default_rng(seed)
    checked = failures = attempts = 0
    worst = 0.0
    t0 = time.perf_counter()
    while checked < n_instances and attempts < max_attempts:
        attempts += 1
        state, meta, Bt, config = random_slot_instance(rng)
        chunk, nxt = chunk_pair(meta, 0)
        try:
            best = exhaustive_step(state, chunk, nxt, Bt, config, grid=meta.grid, T=meta.chunk_duration_T)
        except InfeasibleAssignment:
            continue
        online = etscaa_step(state, chunk, nxt, Bt, config, grid=meta.grid, T=meta.chunk_duration_T)
        checked += 1
        bound = competitive_bound(chunk, online.fetch_set.tiles, config)
        if best.best_objective <= 0:
            ok = online.objective_value <= 1e-12
            ratio = 1.0
        else:
            ratio = online.objective_value / best.best_objective
            ok = ratio <= bound * (1 + 1e-12) and best.best_objective <= online.objective_value * (1 + 1e-12)
        worst = max(worst, ratio / bound)
        failures += not ok
    return CheckResult(
        "online/offline <= competitive bound", checked, failures, time.perf_counter() - t0, f"max ratio/bound {worst:.4f}"
    )


def run_all(dp_instances: int = 1000, slot_instances: int = 500, seed: int = 0) -> bool:
    results = [check_dp_optimality(dp_instances, seed), check_competitive_bound(slot_instances, seed + 1)]
    for r in results:
        print(r.line())
    return all(r.ok for r in results)
