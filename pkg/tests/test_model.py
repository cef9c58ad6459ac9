import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tilestream.config import ValidationError
from tilestream.model import (
    ChunkMeta,
    TileGrid,
    VideoMeta,
    chunk_pair,
    load_metadata,
    metadata_from_dict,
    save_metadata,
    synthesize_metadata,
    tiles_overlapping_viewport,
)


def test_fig2_numbering_is_column_major():
    g = TileGrid(6, 8)
    # tiles 1, 7, 13 share the top row
    assert [g.index(1, c) for c in (1, 2, 3)] == [1, 7, 13]
    assert g.position(10) == (4, 2)
    assert g.position(17) == (5, 3)


@given(st.integers(1, 12), st.integers(1, 12), st.data())
def test_index_round_trip(rows, cols, data):
    g = TileGrid(rows, cols)
    i = data.draw(st.integers(1, g.n_tiles))
    assert g.index(*g.position(i)) == i


def test_round_trip_through_json(tmp_path):
    meta = synthesize_metadata(2, 6, 8, 5, seed=3)
    path = tmp_path / "meta.json"
    save_metadata(meta, path)
    back = load_metadata(path)
    assert back.n_tiles == 48 and back.n_levels == 5 and len(back) == 2
    for a, b in zip(meta.chunks, back.chunks):
        np.testing.assert_array_equal(a.bitrate, b.bitrate)
        np.testing.assert_array_equal(a.distortion, b.distortion)
        np.testing.assert_array_equal(a.flow, b.flow)


def test_non_monotone_bitrate_names_chunk_and_tile(tmp_path):
    doc = synthesize_metadata(2, 6, 8, 5, seed=1).to_json_dict()
    for r in doc["records"]:
        if r["chunk"] == 2 and r["tile"] == 7 and r["level"] == 3:
            r["bitrate_mbit"] = 0.0001
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match=r"chunk 2.*tile 7.*levels 2->3"):
        load_metadata(path)


def test_missing_record_rejected():
    doc = synthesize_metadata(1, 2, 3, 2, seed=1).to_json_dict()
    doc["records"].pop()
    with pytest.raises(ValidationError, match="missing record"):
        metadata_from_dict(doc)


def test_ssim_is_reciprocal_distortion():
    n, L = 4, 3
    d = np.tile([1.5, 1.25, 1.1], (n, 1))
    chunk = ChunkMeta(np.tile([1.0, 2.0, 3.0], (n, 1)), d, np.full((n, L), 0.2))
    assert chunk.ssim(3, 2) == pytest.approx(0.8, rel=1e-15)
    assert chunk.tile(3, 2).ssim == pytest.approx(0.8, rel=1e-15)


def test_generator_is_deterministic():
    a = synthesize_metadata(1, 6, 8, 5, seed=7)
    b = synthesize_metadata(1, 6, 8, 5, seed=7)
    assert a.to_json_dict() == b.to_json_dict()
    assert a.to_json_dict() != synthesize_metadata(1, 6, 8, 5, seed=8).to_json_dict()


@pytest.mark.parametrize("seed", range(5))
def test_generator_contract(seed):
    meta = synthesize_metadata(3, 6, 8, 5, seed=seed)
    for k, c in enumerate(meta.chunks, 1):
        c.check(k)
        ratio = c.bitrate[:, -1] / c.bitrate[:, 0]
        assert np.all((ratio >= 8) & (ratio <= 32))


def test_video_meta_rejects_mismatched_chunks():
    g = TileGrid(1, 2)
    ok = ChunkMeta(np.array([[1.0, 2.0]] * 2), np.array([[2.0, 1.5]] * 2), np.zeros((2, 2)))
    bad = ChunkMeta(np.array([[1.0]] * 2), np.array([[2.0]] * 2), np.zeros((2, 1)))
    with pytest.raises(ValidationError):
        VideoMeta((ok, bad), 1.0, g)
    with pytest.raises(ValidationError):
        VideoMeta((ok,), 0.0, g)


def test_chunk_pair_recycles_and_duplicates_last():
    meta = synthesize_metadata(3, 2, 3, 2, seed=0)
    c, n = chunk_pair(meta, 1)
    assert c is meta.chunks[1] and n is meta.chunks[2]
    c, n = chunk_pair(meta, 2)
    assert c is n is meta.chunks[2]
    c, _ = chunk_pair(meta, 4)
    assert c is meta.chunks[1]


def test_single_tile_viewport():
    g = TileGrid(6, 8)
    assert tiles_overlapping_viewport(g.tile_center(10), (45.0, 30.0), g) == {10}


def test_viewport_straddling_yaw_seam():
    g = TileGrid(6, 8)
    tiles = tiles_overlapping_viewport((0.0, 0.0), (20.0, 10.0), g)
    cols = {g.position(i)[1] for i in tiles}
    assert cols == {1, 8}


def _sampled_tiles(center, viewport, g):
    """Tiles hit by the midpoints of a 1-degree sampling of the viewport."""
    yaw, pitch = center
    w, h = viewport
    dy, dp = np.meshgrid(np.arange(-w / 2 + 0.5, w / 2, 1.0), np.arange(-h / 2 + 0.5, h / 2, 1.0))
    ys, ps = (yaw + dy).ravel(), (pitch + dp).ravel()
    keep = np.abs(ps) <= 90
    ys, ps = ys[keep], ps[keep]
    rows = np.clip(np.floor((90.0 - ps) / g.tile_height_deg).astype(int) + 1, 1, g.rows)
    cols = np.clip(np.floor((ys % 360.0) / g.tile_width_deg).astype(int) + 1, 1, g.cols)
    return set(((cols - 1) * g.rows + rows).tolist())


def test_overlap_matches_point_sampling_oracle(rng):
    g = TileGrid(6, 8)
    sizes = set()
    for _ in range(1000):
        center = (float(rng.integers(0, 360)), float(rng.integers(-40, 41)))
        tiles = tiles_overlapping_viewport(center, (100.0, 100.0), g)
        assert tiles == _sampled_tiles(center, (100.0, 100.0), g), center
        rows = {g.position(i)[0] for i in tiles}
        cols = {g.position(i)[1] for i in tiles}
        sizes.add((len(rows), len(cols)))
    # 100 degrees spans 4-5 rows of 30 and 3-4 columns of 45
    assert sizes <= {(r, c) for r in (4, 5) for c in (3, 4)}
