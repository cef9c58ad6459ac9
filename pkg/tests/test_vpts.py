import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tilestream.config import Config
from tilestream.controller import SystemState, predict_fetch_set
from tilestream.model import TileGrid, tiles_overlapping_viewport
from tilestream.vpts import (
    Pose,
    Rotation,
    candidate_positions,
    predict_center,
    select_tiles,
    viewing_probabilities,
    viewing_probabilities_bruteforce,
)

GRID = TileGrid(6, 8)


@pytest.mark.parametrize(
    "pose,rot,expected",
    [((30, 0), (20, 10), (50, 10)), ((350, 0), (20, 0), (10, 0)), ((0, 85), (0, 20), (0, 90))],
)
def test_predict_center(pose, rot, expected):
    c = predict_center(Pose(*pose), Rotation(*rot), 1.0)
    assert (c.yaw_deg, c.pitch_deg) == pytest.approx(expected)


def test_pose_normalizes():
    p = Pose(-30, -120)
    assert (p.yaw_deg, p.pitch_deg) == (330.0, -90.0)


@pytest.mark.parametrize("sy,sp", [(10, 10), (3, 17), (0, 8)])
def test_candidate_weights_sum_to_one(sy, sp):
    w = [w for _, w in candidate_positions(Pose(100, 20), sy, sp)]
    assert sum(w) == pytest.approx(1.0, abs=1e-9)


def test_zero_spread_gives_indicator():
    c = Pose(67.0, 12.0)
    p = viewing_probabilities(c, 0.0, 0.0, (100, 100), GRID)
    inside = tiles_overlapping_viewport((c.yaw_deg, c.pitch_deg), (100, 100), GRID)
    expected = np.zeros(GRID.n_tiles)
    expected[np.array(sorted(inside)) - 1] = 1.0
    np.testing.assert_array_equal(p, expected)


def test_always_covered_tile_has_probability_one():
    yaw, pitch = GRID.tile_center(16)
    p = viewing_probabilities(Pose(yaw, pitch), 10, 10, (100, 100), GRID)
    assert p[15] == 1.0 and p.max() == 1.0


def test_symmetric_about_center_column():
    yaw, pitch = GRID.tile_center(GRID.index(3, 4))
    p = viewing_probabilities(Pose(yaw, pitch), 10, 10, (100, 100), GRID).reshape(GRID.cols, GRID.rows)
    # reflect columns about column 4
    for d in range(1, 4):
        np.testing.assert_allclose(p[3 - d], p[3 + d], atol=1e-12)


@given(
    yaw=st.floats(0, 360, exclude_max=True),
    pitch=st.floats(-90, 90),
    sy=st.sampled_from([0.0, 4.0, 10.0, 15.0]),
    sp=st.sampled_from([0.0, 6.0, 10.0]),
    w=st.floats(20, 140),
    h=st.floats(20, 120),
)
def test_separable_matches_bruteforce(yaw, pitch, sy, sp, w, h):
    c = Pose(yaw, pitch)
    a = viewing_probabilities(c, sy, sp, (w, h), GRID)
    b = viewing_probabilities_bruteforce(c, sy, sp, (w, h), GRID)
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert np.all((a >= 0) & (a <= 1))


def fig2_field(eps=0.05):
    p = np.zeros(GRID.n_tiles)
    for i, v in {10: 0.9, 11: 0.6, 16: 0.5, 17: 0.3, 12: 0.02, 18: 0.01}.items():
        p[i - 1] = v
    return p


def test_fig2_trims_bottom_row():
    fs = select_tiles(fig2_field(), GRID, 0.05)
    assert fs.tiles == (10, 11, 16, 17)


def test_no_trim_when_all_above_threshold():
    p = fig2_field()
    p[[11, 17]] = 0.2
    assert select_tiles(p, GRID, 0.05).tiles == (10, 11, 12, 16, 17, 18)


def test_zero_threshold_returns_bounding_rectangle():
    p = np.zeros(GRID.n_tiles)
    p[[0, 20]] = 0.5  # tiles 1 and 21: rows 1..3, cols 1..4
    fs = select_tiles(p, GRID, 0.0)
    assert fs.rows == (1, 2, 3) and fs.cols == (1, 2, 3, 4)
    assert len(fs) == 12


def test_rectangle_wraps_across_seam():
    p = np.zeros(GRID.n_tiles)
    p[[GRID.index(3, 8) - 1, GRID.index(3, 1) - 1]] = 0.5
    fs = select_tiles(p, GRID, 0.0)
    assert fs.cols == (8, 1)


def test_interior_low_tiles_are_kept():
    p = np.full(GRID.n_tiles, 0.0)
    for r in (2, 3, 4):
        for c in (2, 3, 4):
            p[GRID.index(r, c) - 1] = 0.5
    p[GRID.index(3, 3) - 1] = 0.001
    fs = select_tiles(p, GRID, 0.05)
    assert GRID.index(3, 3) in fs and len(fs) == 9


def _fields():
    return st.lists(st.floats(0, 1), min_size=GRID.n_tiles, max_size=GRID.n_tiles).filter(lambda v: max(v) > 0)


@given(_fields(), st.floats(0, 0.6))
def test_select_tiles_idempotent(values, eps):
    p = np.array(values)
    fs = select_tiles(p, GRID, eps)
    q = np.where(np.isin(np.arange(1, GRID.n_tiles + 1), fs.tiles), p, 0.0)
    if q.max() == 0:
        q[int(np.argmax(p))] = p.max()
    assert select_tiles(q, GRID, eps).tiles == fs.tiles


@given(_fields(), st.floats(0, 0.6), st.floats(0, 0.6))
def test_smaller_threshold_never_shrinks(values, e1, e2):
    p = np.array(values)
    lo, hi = sorted((e1, e2))
    assert set(select_tiles(p, GRID, hi).tiles) <= set(select_tiles(p, GRID, lo).tiles)


@given(
    yaw=st.floats(0, 360, exclude_max=True),
    pitch=st.floats(-90, 90),
    wy=st.floats(-120, 120),
    wp=st.floats(-60, 60),
    eps=st.floats(0.01, 0.9),
)
def test_center_tile_always_fetched(yaw, pitch, wy, wp, eps):
    config = Config(epsilon=eps)
    state = SystemState(0.5, 0.0, Pose(yaw, pitch), Rotation(wy, wp))
    p, fs = predict_fetch_set(state, GRID, config, 1.0)
    c = predict_center(state.pose, state.rotation, 1.0)
    assert GRID.tile_at(c.yaw_deg, c.pitch_deg) in fs
    assert int(np.argmax(p)) + 1 in fs
