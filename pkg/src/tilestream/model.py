"""Tile-grid geometry and per-chunk video metadata.

Tiles are numbered from 1, column-major and top-to-bottom: on a 6-row grid
tiles 1, 7, 13 share the top row. Rows span pitch from +90 (top) to -90,
columns span yaw from 0 to 360.

Metadata file format (JSON)::

    {
      "header": {"chunk_duration_s": 1.0, "rows": 6, "cols": 8, "levels": 5},
      "records": [
        {"chunk": 1, "tile": 1, "level": 1,
         "bitrate_mbit": 0.08, "distortion": 1.17, "flow": 0.21},
        ...
      ]
    }

Every (chunk, tile, level) triple appears exactly once, all indices 1-based.
Bitrates are megabits per chunk, distortion is 1/SSIM, flow is the
normalized optical-flow magnitude in [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .config import ValidationError


@dataclass(frozen=True)
class TileGrid:
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValidationError(f"grid dimensions must be positive, got {self.rows}x{self.cols}")

    @property
    def n_tiles(self) -> int:
        return self.rows * self.cols

    @property
    def tile_width_deg(self) -> float:
        return 360.0 / self.cols

    @property
    def tile_height_deg(self) -> float:
        return 180.0 / self.rows

    def index(self, row: int, col: int) -> int:
        """1-based (row, col) -> 1-based column-major tile index."""
        if not (1 <= row <= self.rows and 1 <= col <= self.cols):
            raise IndexError(f"(row={row}, col={col}) outside {self.rows}x{self.cols} grid")
        return (col - 1) * self.rows + row

    def position(self, tile: int) -> tuple[int, int]:
        """1-based tile index -> (row, col)."""
        if not 1 <= tile <= self.n_tiles:
            raise IndexError(f"tile {tile} outside 1..{self.n_tiles}")
        col, row = divmod(tile - 1, self.rows)
        return row + 1, col + 1

    def tile_center(self, tile: int) -> tuple[float, float]:
        row, col = self.position(tile)
        yaw = (col - 0.5) * self.tile_width_deg
        pitch = 90.0 - (row - 0.5) * self.tile_height_deg
        return yaw, pitch

    def row_of_pitch(self, pitch: float) -> int:
        r = int(math.floor((90.0 - pitch) / self.tile_height_deg)) + 1
        return min(max(r, 1), self.rows)

    def col_of_yaw(self, yaw: float) -> int:
        c = int(math.floor((yaw % 360.0) / self.tile_width_deg)) + 1
        return min(max(c, 1), self.cols)

    def tile_at(self, yaw: float, pitch: float) -> int:
        return self.index(self.row_of_pitch(pitch), self.col_of_yaw(yaw))


_EPS = 1e-9


def overlapping_rows(pitch: float, h_deg: float, grid: TileGrid) -> list[int]:
    if h_deg <= 0:
        return [grid.row_of_pitch(pitch)]
    lo = max(-90.0, pitch - h_deg / 2)
    hi = min(90.0, pitch + h_deg / 2)
    th = grid.tile_height_deg
    rows = []
    for r in range(1, grid.rows + 1):
        top = 90.0 - (r - 1) * th
        bottom = 90.0 - r * th
        if min(hi, top) - max(lo, bottom) > _EPS:
            rows.append(r)
    if not rows:
        # viewport squeezed against a pole
        rows.append(grid.row_of_pitch(pitch))
    return rows


def overlapping_cols(yaw: float, w_deg: float, grid: TileGrid) -> list[int]:
    if w_deg <= 0:
        return [grid.col_of_yaw(yaw)]
    if w_deg >= 360.0:
        return list(range(1, grid.cols + 1))
    yaw = yaw % 360.0
    lo, hi = yaw - w_deg / 2, yaw + w_deg / 2
    tw = grid.tile_width_deg
    cols = []
    for c in range(1, grid.cols + 1):
        left, right = (c - 1) * tw, c * tw
        for shift in (-360.0, 0.0, 360.0):
            if min(hi, right + shift) - max(lo, left + shift) > _EPS:
                cols.append(c)
                break
    return cols


def tiles_overlapping_viewport(
    center: tuple[float, float], viewport: tuple[float, float], grid: TileGrid
) -> frozenset[int]:
    """Tiles whose angular rectangle intersects the viewport with positive area.

    Yaw wraps modulo 360; pitch is clipped at the poles.
    """
    yaw, pitch = center
    w, h = viewport
    rows = overlapping_rows(pitch, h, grid)
    cols = overlapping_cols(yaw, w, grid)
    return frozenset(grid.index(r, c) for r in rows for c in cols)


class TileMeta(NamedTuple):
    bitrate_b: float
    distortion_d: float
    flow_f: float

    @property
    def ssim(self) -> float:
        return 1.0 / self.distortion_d


class ChunkMeta:
    """Per-chunk (tile, level) tables, stored as read-only (N, L) arrays.

    Row ``i - 1`` holds tile ``i``; column ``j - 1`` holds level ``j``.
    """

    __slots__ = ("bitrate", "distortion", "flow")

    def __init__(self, bitrate, distortion, flow):
        b = np.array(bitrate, dtype=float)
        d = np.array(distortion, dtype=float)
        f = np.array(flow, dtype=float)
        if b.ndim != 2 or b.shape != d.shape or b.shape != f.shape:
            raise ValidationError(f"inconsistent table shapes {b.shape}, {d.shape}, {f.shape}")
        for a in (b, d, f):
            a.setflags(write=False)
        self.bitrate, self.distortion, self.flow = b, d, f

    @property
    def n_tiles(self) -> int:
        return self.bitrate.shape[0]

    @property
    def n_levels(self) -> int:
        return self.bitrate.shape[1]

    def tile(self, i: int, j: int) -> TileMeta:
        return TileMeta(
            float(self.bitrate[i - 1, j - 1]),
            float(self.distortion[i - 1, j - 1]),
            float(self.flow[i - 1, j - 1]),
        )

    def ssim(self, i: int, j: int) -> float:
        return 1.0 / float(self.distortion[i - 1, j - 1])

    def check(self, chunk_no: int | None = None) -> None:
        """Raise ValidationError naming the first offending (chunk, tile[, level])."""
        where = f"chunk {chunk_no}, " if chunk_no is not None else ""
        b, d, f = self.bitrate, self.distortion, self.flow
        for name, arr in (("bitrate", b), ("distortion", d), ("flow", f)):
            if not np.all(np.isfinite(arr)):
                i, j = np.argwhere(~np.isfinite(arr))[0] + 1
                raise ValidationError(f"{where}tile {i}, level {j}: non-finite {name}")
        checks = (
            (b < 0, "negative bitrate"),
            (d < 1.0, "distortion below 1 (SSIM above 1)"),
            ((f < 0) | (f > 1), "flow outside [0, 1]"),
        )
        for mask, msg in checks:
            if mask.any():
                i, j = np.argwhere(mask)[0] + 1
                raise ValidationError(f"{where}tile {i}, level {j}: {msg}")
        if self.n_levels > 1:
            for mask, msg in (
                (np.diff(b, axis=1) <= 0, "bitrate not strictly increasing in level"),
                (np.diff(d, axis=1) >= 0, "distortion not strictly decreasing in level"),
                (np.diff(f, axis=1) < 0, "flow decreasing in level"),
            ):
                if mask.any():
                    i, j = np.argwhere(mask)[0] + 1
                    raise ValidationError(f"{where}tile {i}, levels {j}->{j + 1}: {msg}")


@dataclass(frozen=True)
class VideoMeta:
    chunks: tuple[ChunkMeta, ...]
    chunk_duration_T: float
    grid: TileGrid

    def __post_init__(self):
        if self.chunk_duration_T <= 0:
            raise ValidationError("chunk duration must be positive")
        if not self.chunks:
            raise ValidationError("video has no chunks")
        n, L = self.chunks[0].bitrate.shape
        if n != self.grid.n_tiles:
            raise ValidationError(f"chunk has {n} tiles but grid has {self.grid.n_tiles}")
        for k, c in enumerate(self.chunks, start=1):
            if c.bitrate.shape != (n, L):
                raise ValidationError(f"chunk {k}: shape {c.bitrate.shape} != {(n, L)}")
            c.check(k)

    @property
    def n_tiles(self) -> int:
        return self.grid.n_tiles

    @property
    def n_levels(self) -> int:
        return self.chunks[0].n_levels

    def __len__(self) -> int:
        return len(self.chunks)

    def to_json_dict(self) -> dict:
        records = []
        for k, c in enumerate(self.chunks, start=1):
            for i in range(1, c.n_tiles + 1):
                for j in range(1, c.n_levels + 1):
                    t = c.tile(i, j)
                    records.append(
                        {
                            "chunk": k,
                            "tile": i,
                            "level": j,
                            "bitrate_mbit": t.bitrate_b,
                            "distortion": t.distortion_d,
                            "flow": t.flow_f,
                        }
                    )
        header = {
            "chunk_duration_s": self.chunk_duration_T,
            "rows": self.grid.rows,
            "cols": self.grid.cols,
            "levels": self.n_levels,
        }
        return {"header": header, "records": records}


def save_metadata(meta: VideoMeta, path) -> None:
    Path(path).write_text(json.dumps(meta.to_json_dict(), indent=1))


def metadata_from_dict(doc: dict) -> VideoMeta:
    try:
        header = doc["header"]
        T = float(header["chunk_duration_s"])
        rows, cols, L = int(header["rows"]), int(header["cols"]), int(header["levels"])
        records = doc["records"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed metadata header: {exc!r}") from exc
    grid = TileGrid(rows, cols)
    if L < 1:
        raise ValidationError("levels must be positive")
    n = grid.n_tiles
    if not isinstance(records, list) or not records:
        raise ValidationError("metadata has no records")
    try:
        n_chunks = max(int(r["chunk"]) for r in records)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed record: {exc!r}") from exc
    tables = np.full((3, n_chunks, n, L), np.nan)
    for pos, r in enumerate(records):
        try:
            k, i, j = int(r["chunk"]), int(r["tile"]), int(r["level"])
            vals = (float(r["bitrate_mbit"]), float(r["distortion"]), float(r["flow"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"record {pos}: {exc!r}") from exc
        if not (1 <= k <= n_chunks and 1 <= i <= n and 1 <= j <= L):
            raise ValidationError(f"record {pos}: (chunk {k}, tile {i}, level {j}) out of range")
        if not np.isnan(tables[0, k - 1, i - 1, j - 1]):
            raise ValidationError(f"duplicate record for chunk {k}, tile {i}, level {j}")
        tables[:, k - 1, i - 1, j - 1] = vals
    missing = np.argwhere(np.isnan(tables[0]))
    if len(missing):
        k, i, j = missing[0] + 1
        raise ValidationError(f"missing record for chunk {k}, tile {i}, level {j}")
    chunks = tuple(ChunkMeta(tables[0, k], tables[1, k], tables[2, k]) for k in range(n_chunks))
    return VideoMeta(chunks, T, grid)


def load_metadata(path) -> VideoMeta:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    return metadata_from_dict(doc)


# Synthetic generator constants. Level 1..5 correspond to CRF 43, 38, 33, 28, 23.
# x264 rule of thumb: CRF -6 doubles bitrate, so each -5 step multiplies by 2**(5/6)
# and level 5 / level 1 is 2**(20/6) ~ 10.1.
CRF_STEP_BITRATE_RATIO = 2.0 ** (5.0 / 6.0)
# Full-frame 4K equirectangular at CRF 23 taken as ~40 Mbps, i.e. 40 / 48 Mbit
# per tile-second at level 5 on the default grid.
TOP_LEVEL_FRAME_MBPS = 40.0
# SSIM loss (1 - SSIM) at level 1 and its shrink factor per level: 0.86, 0.913, ...
BASE_SSIM_LOSS = 0.14
SSIM_LOSS_DECAY = 0.62
# Fraction of a tile's optical flow removed at the lowest quality level.
FLOW_LOSS_AT_LOWEST_LEVEL = 0.3


def synthesize_metadata(
    chunks: int, rows: int = 6, cols: int = 8, levels: int = 5, seed: int = 0, chunk_duration_s: float = 1.0
) -> VideoMeta:
    """Deterministic synthetic metadata standing in for an encoder pipeline.

    Each tile gets a static texture complexity and a time-varying motion level;
    both are higher near the equator. Bitrate grows geometrically with level
    and with complexity/motion, SSIM loss shrinks geometrically with level,
    and flow follows motion with a mild reduction at low quality.
    """
    if chunks < 1 or rows < 1 or cols < 1 or levels < 1:
        raise ValidationError("synthetic metadata dimensions must be positive")
    rng = np.random.default_rng(seed)
    grid = TileGrid(rows, cols)
    n = grid.n_tiles

    lat = np.array([grid.tile_center(i)[1] for i in range(1, n + 1)])
    equator = np.cos(np.radians(lat))
    complexity = np.clip(0.3 + 0.4 * equator + rng.normal(0, 0.12, n), 0.05, 1.0)
    motion_mean = np.clip(0.15 + 0.45 * equator + rng.normal(0, 0.1, n), 0.02, 0.95)

    level_idx = np.arange(levels)
    ladder = CRF_STEP_BITRATE_RATIO ** (level_idx - (levels - 1))
    per_tile_top = TOP_LEVEL_FRAME_MBPS * chunk_duration_s / n
    ssim_loss = BASE_SSIM_LOSS * SSIM_LOSS_DECAY**level_idx
    if levels > 1:
        flow_scale = 1.0 - FLOW_LOSS_AT_LOWEST_LEVEL * (levels - 1 - level_idx) / (levels - 1)
    else:
        flow_scale = np.ones(1)

    out = []
    motion = motion_mean.copy()
    for _ in range(chunks):
        # AR(1) around the tile's mean motion
        motion = np.clip(motion_mean + 0.8 * (motion - motion_mean) + rng.normal(0, 0.06, n), 0.0, 1.0)
        size = per_tile_top * (0.5 + 0.6 * complexity + 0.4 * motion)
        b = size[:, None] * ladder[None, :]
        loss = np.clip(ssim_loss[None, :] * (0.6 + 0.8 * complexity)[:, None], 0.0, 0.6)
        d = 1.0 / (1.0 - loss)
        f = motion[:, None] * flow_scale[None, :]
        out.append(ChunkMeta(b, d, f))
    return VideoMeta(tuple(out), float(chunk_duration_s), grid)


def chunk_pair(meta: VideoMeta, t: int) -> tuple[ChunkMeta, ChunkMeta]:
    """Chunk played at slot ``t`` and its lookahead, recycling cyclically.

    The video's last chunk serves as its own lookahead.
    """
    k = t % len(meta.chunks)
    nxt = k + 1 if k + 1 < len(meta.chunks) else k
    return meta.chunks[k], meta.chunks[nxt]


def iter_tiles(meta: VideoMeta) -> Iterable[tuple[int, int, int, TileMeta]]:
    for k, c in enumerate(meta.chunks, start=1):
        for i in range(1, c.n_tiles + 1):
            for j in range(1, c.n_levels + 1):
                yield k, i, j, c.tile(i, j)
