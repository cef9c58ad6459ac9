"""Per-slot decision making: the ETSCAA sweep and simplified baselines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import Config
from .ctqc import refine, smi_table
from .model import ChunkMeta, TileGrid
from .queues import bandwidth_budget, shrink_factor, update_packet_queue, update_sickness_queue
from .tqa import Assignment, InfeasibleAssignment, assign_quality_dp, quantize, tau_table, vli_table
from .vpts import FetchSet, Pose, Rotation, predict_center, select_tiles, viewing_probabilities

INFEASIBLE = "infeasible"
OBJECTIVE_RTOL = 1e-12


@dataclass(frozen=True)
class SystemState:
    qp: float
    qs: float
    pose: Pose
    rotation: Rotation = Rotation()
    gamma: float = 0.0  # megabits fetched in the previous slot


@dataclass(frozen=True)
class Evaluation:
    distortion: float  # D_t
    phi: float
    expected_flow: float
    weighted_ssim: float
    total_bitrate: float
    objective: float
    predicted_qs_next: float
    predicted_qp_next: float


@dataclass(frozen=True)
class Decision:
    fetch_set: FetchSet
    assignment: Assignment
    s_fov: float
    y_dof: int
    objective_value: float
    predicted_qs_next: float
    predicted_qp_next: float
    evaluation: Evaluation
    probabilities: np.ndarray = field(repr=False, compare=False)
    budget_units: int = 0
    algo: str = "etscaa"
    events: tuple[str, ...] = ()


@dataclass(frozen=True)
class Candidate:
    """One evaluated (configuration, assignment) pair from a sweep."""

    s_fov: float
    y_dof: int
    budget_units: int
    initial: Optional[Assignment]
    refined: Optional[Assignment]
    evaluation: Optional[Evaluation]


def _weighted_mean(assignment: Assignment, p, table: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    num = den = 0.0
    for i, j in zip(assignment.tiles, assignment.levels):
        num += p[i - 1] * table[i - 1, j - 1]
        den += p[i - 1]
    if den <= 0:
        raise ValueError("assignment carries no probability mass")
    return num / den


def expected_distortion(assignment: Assignment, p, chunk: ChunkMeta) -> float:
    return _weighted_mean(assignment, p, chunk.distortion)


def expected_flow(assignment: Assignment, p, chunk: ChunkMeta) -> float:
    return _weighted_mean(assignment, p, chunk.flow)


def weighted_ssim(assignment: Assignment, p, chunk: ChunkMeta) -> float:
    return _weighted_mean(assignment, p, 1.0 / chunk.distortion)


def quality_loss(D: float, s_fov: float, y_dof: int, k_dof: float) -> float:
    factor = shrink_factor(s_fov, y_dof, k_dof)
    if factor <= 0:
        raise ValueError(f"degenerate shrink factor {factor}")
    return D / factor


def total_bitrate(assignment: Assignment, chunk: ChunkMeta) -> float:
    return float(sum(chunk.bitrate[i - 1, j - 1] for i, j in zip(assignment.tiles, assignment.levels)))


def evaluate(
    assignment: Assignment, p, chunk: ChunkMeta, state: SystemState, s_fov: float, y_dof: int, Bt: float, config: Config, T: float
) -> Evaluation:
    """Objective and one-step queue predictions, holding the current rotation."""
    D = expected_distortion(assignment, p, chunk)
    phi = quality_loss(D, s_fov, y_dof, config.k_dof)
    ef = expected_flow(assignment, p, chunk)
    rot = state.rotation
    qs_next = update_sickness_queue(
        state.qs, rot.omega_y_deg_s, rot.omega_p_deg_s, ef, s_fov, y_dof, config.k_dof, config.cs, config.omega
    ).value
    gamma = total_bitrate(assignment, chunk)
    qp_next = update_packet_queue(state.qp, T, config.cp_seconds, s_fov, y_dof, config.k_dof, gamma, Bt).value
    return Evaluation(
        distortion=D,
        phi=phi,
        expected_flow=ef,
        weighted_ssim=weighted_ssim(assignment, p, chunk),
        total_bitrate=gamma,
        objective=config.xi * phi + config.rho * qs_next,
        predicted_qs_next=qs_next,
        predicted_qp_next=qp_next,
    )


def predict_fetch_set(state: SystemState, grid: TileGrid, config: Config, T: float) -> tuple[np.ndarray, FetchSet]:
    center = predict_center(state.pose, state.rotation, T)
    p = viewing_probabilities(
        center,
        config.sigma_y_deg,
        config.sigma_p_deg,
        (config.viewport_w_deg, config.viewport_h_deg),
        grid,
        config.lattice_step_deg,
    )
    fetch = select_tiles(p, grid, config.epsilon, protect=grid.tile_at(center.yaw_deg, center.pitch_deg))
    return p, fetch


def slot_budget(state: SystemState, Bt: float, s_fov: float, y_dof: int, config: Config, T: float) -> int:
    return bandwidth_budget(
        state.qp, Bt, T, config.cp_seconds, config.lambda_target, s_fov, y_dof, config.k_dof, config.bw_unit
    )


def _decision(fetch, p, assignment, s, y, ev, budget, algo, events=()) -> Decision:
    return Decision(
        fetch_set=fetch,
        assignment=assignment,
        s_fov=s,
        y_dof=y,
        objective_value=ev.objective,
        predicted_qs_next=ev.predicted_qs_next,
        predicted_qp_next=ev.predicted_qp_next,
        evaluation=ev,
        probabilities=p,
        budget_units=budget,
        algo=algo,
        events=tuple(events),
    )


def degraded_decision(state, chunk, fetch, p, Bt, config, T, algo) -> Decision:
    """Everything at level 1 with maximum intervention, used when nothing fits."""
    s, y = min(config.sfov_ladder), max(config.dof_choices)
    units = quantize(chunk.bitrate[np.asarray(fetch.tiles) - 1], config.bw_unit)
    levels = (1,) * len(fetch.tiles)
    a = Assignment(fetch.tiles, levels, int(units[:, 0].sum()), 0.0)
    ev = evaluate(a, p, chunk, state, s, y, Bt, config, T)
    return _decision(fetch, p, a, s, y, ev, slot_budget(state, Bt, s, y, config, T), algo, (INFEASIBLE,))


def sweep_configurations(
    state: SystemState,
    chunk: ChunkMeta,
    next_chunk: ChunkMeta,
    Bt: float,
    config: Config,
    p,
    fetch: FetchSet,
    T: float = 1.0,
) -> list[Candidate]:
    """Run DP and local search for every (s_fov, y_dof) pair, in tie-break order."""
    tiles = fetch.tiles
    idx = np.asarray(tiles) - 1
    units = quantize(chunk.bitrate[idx], config.bw_unit)
    out = []
    for s in config.sfov_ladder:
        for y in sorted(config.dof_choices):
            budget = slot_budget(state, Bt, s, y, config, T)
            costs = tau_table(chunk, tiles, p, s, y, config.k_dof, config.xi, config.rho)
            try:
                initial = assign_quality_dp(tiles, budget, costs, units)
            except InfeasibleAssignment:
                out.append(Candidate(s, y, budget, None, None, None))
                continue
            vli = vli_table(chunk, tiles, p, s, y, config.k_dof)
            smi = smi_table(tiles, state.qs, chunk, next_chunk, vli)
            refined = refine(
                initial, budget, units, smi, config.alpha, config.nsl_capacity, config.max_iterations, costs=costs
            )
            ev = evaluate(refined, p, chunk, state, s, y, Bt, config, T)
            out.append(Candidate(s, y, budget, initial, refined, ev))
    return out


def etscaa_step(
    state: SystemState,
    chunk: ChunkMeta,
    next_chunk: ChunkMeta,
    Bt: float,
    config: Config,
    *,
    grid: TileGrid,
    T: float = 1.0,
) -> Decision:
    """Predict the viewport, sweep every intervention setting, commit the cheapest.

    Ties go to the larger s_fov and then to y_dof = 0.
    """
    if Bt <= 0:
        raise ValueError(f"bandwidth must be positive, got {Bt}")
    p, fetch = predict_fetch_set(state, grid, config, T)
    best = None
    for cand in sweep_configurations(state, chunk, next_chunk, Bt, config, p, fetch, T):
        if cand.evaluation is None:
            continue
        if best is None or cand.evaluation.objective < best.evaluation.objective - OBJECTIVE_RTOL * max(
            1.0, abs(best.evaluation.objective)
        ):
            best = cand
    if best is None:
        return degraded_decision(state, chunk, fetch, p, Bt, config, T, "etscaa")
    return _decision(fetch, p, best.refined, best.s_fov, best.y_dof, best.evaluation, best.budget_units, "etscaa")


# Simplified stand-ins for the comparison schemes: each keeps only the core
# selection rule and never shrinks the FoV or blurs.


def _baseline(name: str, choose: Callable) -> Callable:
    def step(state, chunk, next_chunk, Bt, config, *, grid, T=1.0) -> Decision:
        if Bt <= 0:
            raise ValueError(f"bandwidth must be positive, got {Bt}")
        p, fetch = predict_fetch_set(state, grid, config, T)
        s, y = 1.0, 0
        budget = slot_budget(state, Bt, s, y, config, T)
        units = quantize(chunk.bitrate[np.asarray(fetch.tiles) - 1], config.bw_unit)
        try:
            levels = choose(fetch.tiles, p, units, budget, chunk, config)
        except InfeasibleAssignment:
            return degraded_decision(state, chunk, fetch, p, Bt, config, T, name)
        used = int(sum(units[k, j - 1] for k, j in enumerate(levels)))
        a = Assignment(fetch.tiles, tuple(levels), used, 0.0)
        ev = evaluate(a, p, chunk, state, s, y, Bt, config, T)
        return _decision(fetch, p, a, s, y, ev, budget, name)

    step.__name__ = f"baseline_{name}_step"
    step.__doc__ = f"Simplified '{name}' baseline; fixed s_fov = 1, y_dof = 0."
    return step


def _check_floor(tiles, units, budget):
    if int(units[:, 0].sum()) > budget:
        blocking = [t for t, u in zip(tiles, units[:, 0]) if u > budget] or list(tiles)
        raise InfeasibleAssignment(budget, blocking)


def greedy_levels(tiles, p, units, budget, chunk=None, config=None):
    """Raise tiles to the top level one at a time, most probable tile first."""
    _check_floor(tiles, units, budget)
    L = units.shape[1]
    levels = [1] * len(tiles)
    used = int(units[:, 0].sum())
    order = sorted(range(len(tiles)), key=lambda k: (-p[tiles[k] - 1], tiles[k]))
    for k in order:
        while levels[k] < L:
            extra = int(units[k, levels[k]] - units[k, levels[k] - 1])
            if used + extra > budget:
                break
            used += extra
            levels[k] += 1
    return levels


def uniform_levels(tiles, p, units, budget, chunk=None, config=None):
    """Highest single level that fits for every tile."""
    _check_floor(tiles, units, budget)
    totals = units.sum(axis=0)
    j = max(j for j in range(1, units.shape[1] + 1) if totals[j - 1] <= budget)
    return [j] * len(tiles)


def probdash_levels(tiles, p, units, budget, chunk, config):
    """Distortion-only DP: per-tile cost is the video loss indicator."""
    costs = vli_table(chunk, tiles, p, 1.0, 0, config.k_dof)
    return list(assign_quality_dp(tiles, budget, costs, units).levels)


baseline_greedy_step = _baseline("greedy", greedy_levels)
baseline_uniform_step = _baseline("uniform", uniform_levels)
baseline_probdash_step = _baseline("probdash", probdash_levels)

ALGORITHMS = {
    "etscaa": etscaa_step,
    "greedy": baseline_greedy_step,
    "uniform": baseline_uniform_step,
    "probdash": baseline_probdash_step,
}
