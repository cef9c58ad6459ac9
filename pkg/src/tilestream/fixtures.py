"""Small hand-checkable instances used by the tests and the ``verify`` command.

The worked slot places a 90x60 degree viewport exactly over tiles
{10, 11, 16, 17} of a 6x8 grid with no prediction spread, so every fetched
tile has probability 1 (weight 1/4). All tiles share the per-level tables
below; bitrates are whole megabits so ``bw_unit = 1`` gives integer budgets.

With qs = 0.5 the per-tile SMI contribution ``0.5 * (f(t+1) - f(t)) + VLI``
is smallest at level 3 when s_fov = 1 and y_dof = 0 (0.500 vs 0.510), but at
level 4 for every smaller shrink factor, because VLI scales with 1/s_fov.
Level 4's distortion is low enough that 1.1 / 0.7 beats 2.0 / 1, so the
shrunken viewport at full quality wins the sweep.
"""

from __future__ import annotations

import numpy as np

from .config import Config
from .controller import SystemState
from .model import ChunkMeta, TileGrid, VideoMeta
from .vpts import Pose, Rotation

# Cost/bitrate ladder shared by all four tiles.
EXAMPLE_TILES = (10, 11, 16, 17)
EXAMPLE_TAU = (8.0, 4.0, 2.0, 1.0)
EXAMPLE_UNITS = (1, 2, 3, 4)
EXAMPLE_BUDGET_INPUTS = dict(Bt=8.0, Cp=4.0, qp_prev=0.65, lam=0.5, T=1.0, k_dof=0.1, bw_unit=1.0)
EXAMPLE_CONFIGS = ((1.0, 0), (1.0, 1), (0.7, 0), (0.7, 1))
EXAMPLE_BUDGETS = (13, 14, 18, 20)
EXAMPLE_LEVELS = ((4, 3, 3, 3), (4, 4, 3, 3), (4, 4, 4, 4), (4, 4, 4, 4))


def example_tables(n: int = 4):
    costs = np.tile(np.array(EXAMPLE_TAU), (n, 1))
    units = np.tile(np.array(EXAMPLE_UNITS), (n, 1))
    return costs, units


WORKED_BITRATE = (1.0, 2.0, 3.0, 4.0)
WORKED_DISTORTION = (4.0, 3.0, 2.0, 1.1)
WORKED_FLOW_NOW = (0.1, 0.2, 0.3, 0.4)
WORKED_FLOW_NEXT = (0.1, 0.2, 0.3, 0.87)
WORKED_QS = 0.5


def worked_meta() -> VideoMeta:
    grid = TileGrid(6, 8)
    n = grid.n_tiles

    def chunk(flow):
        return ChunkMeta(
            np.tile(WORKED_BITRATE, (n, 1)), np.tile(WORKED_DISTORTION, (n, 1)), np.tile(flow, (n, 1))
        )

    return VideoMeta((chunk(WORKED_FLOW_NOW), chunk(WORKED_FLOW_NEXT)), 1.0, grid)


def worked_config(**overrides) -> Config:
    base = dict(
        sfov_ladder=(1.0, 0.7),
        dof_choices=(0, 1),
        sigma_y_deg=0.0,
        sigma_p_deg=0.0,
        viewport_w_deg=90.0,
        viewport_h_deg=60.0,
        bw_unit=1.0,
        cp_seconds=4.0,
        lambda_target=0.5,
        k_dof=0.1,
        xi=1.0,
        rho=2.5,
        cs=1000.0,
        omega=0.05,
        qp_init=0.65,
        qs_init=WORKED_QS,
    )
    base.update(overrides)
    return Config(**base)


def worked_state(qs: float = WORKED_QS) -> SystemState:
    return SystemState(qp=0.65, qs=qs, pose=Pose(90.0, -30.0), rotation=Rotation(0.0, 0.0))


WORKED_BANDWIDTH = 8.0
