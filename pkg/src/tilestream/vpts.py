"""Viewport prediction and fetched-tile selection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import TileGrid, overlapping_cols, overlapping_rows, tiles_overlapping_viewport


@dataclass(frozen=True)
class Pose:
    yaw_deg: float
    pitch_deg: float

    def __post_init__(self):
        object.__setattr__(self, "yaw_deg", float(self.yaw_deg) % 360.0)
        object.__setattr__(self, "pitch_deg", min(max(float(self.pitch_deg), -90.0), 90.0))


@dataclass(frozen=True)
class Rotation:
    omega_y_deg_s: float = 0.0
    omega_p_deg_s: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.omega_y_deg_s) and math.isfinite(self.omega_p_deg_s)):
            raise ValueError("rotation speeds must be finite")


@dataclass(frozen=True)
class FetchSet:
    tiles: tuple[int, ...]  # ascending
    rows: tuple[int, ...]  # top to bottom
    cols: tuple[int, ...]  # left to right, may wrap past the last column

    def __len__(self):
        return len(self.tiles)

    def __contains__(self, tile):
        return tile in self.tiles


def predict_center(pose: Pose, rot: Rotation, T: float) -> Pose:
    return Pose(pose.yaw_deg + rot.omega_y_deg_s * T, pose.pitch_deg + rot.omega_p_deg_s * T)


def _lattice(sigma: float, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Offsets on a ``step`` lattice within 3 sigma and their 1-D Gaussian weights."""
    if sigma <= 0:
        return np.zeros(1), np.ones(1)
    k = int(math.floor(3.0 * sigma / step + 1e-9))
    offsets = step * np.arange(-k, k + 1)
    w = np.exp(-0.5 * (offsets / sigma) ** 2)
    return offsets, w


def candidate_positions(center: Pose, sigma_y: float, sigma_p: float, step: float = 5.0):
    """Candidate viewport centers around ``center`` with normalized weights."""
    oy, wy = _lattice(sigma_y, step)
    op, wp = _lattice(sigma_p, step)
    w = np.outer(wy, wp)
    w /= w.sum()
    out = []
    for a, dy in enumerate(oy):
        for b, dp in enumerate(op):
            out.append((Pose(center.yaw_deg + dy, center.pitch_deg + dp), float(w[a, b])))
    return out


def viewing_probabilities(
    center: Pose,
    sigma_y: float,
    sigma_p: float,
    viewport: tuple[float, float],
    grid: TileGrid,
    step: float = 5.0,
) -> np.ndarray:
    """Per-tile viewing probability; entry ``i - 1`` belongs to tile ``i``.

    A tile's probability is the total weight of candidate viewports that
    overlap it, so tiles covered by every candidate get exactly 1. Weights and
    overlap both factor into a yaw part and a pitch part, so the sum over the
    candidate lattice is computed as an outer product of per-axis sums.
    """
    w_deg, h_deg = viewport
    oy, wy = _lattice(sigma_y, step)
    op, wp = _lattice(sigma_p, step)
    wy, wp = wy / wy.sum(), wp / wp.sum()
    col_p = np.zeros(grid.cols)
    for dy, w in zip(oy, wy):
        col_p[np.asarray(overlapping_cols(center.yaw_deg + dy, w_deg, grid)) - 1] += w
    row_p = np.zeros(grid.rows)
    for dp, w in zip(op, wp):
        pitch = min(max(center.pitch_deg + dp, -90.0), 90.0)
        row_p[np.asarray(overlapping_rows(pitch, h_deg, grid)) - 1] += w
    # tile i = (col - 1) * rows + row, so columns are the slow axis
    p = np.outer(col_p, row_p).ravel()
    return np.minimum(p, 1.0)


def viewing_probabilities_bruteforce(center, sigma_y, sigma_p, viewport, grid, step=5.0) -> np.ndarray:
    """Candidate-by-candidate summation of the same quantity (reference path)."""
    p = np.zeros(grid.n_tiles)
    for pose, w in candidate_positions(center, sigma_y, sigma_p, step):
        for i in tiles_overlapping_viewport((pose.yaw_deg, pose.pitch_deg), viewport, grid):
            p[i - 1] += w
    return np.minimum(p, 1.0)


def _column_span(cols: set[int], n_cols: int) -> list[int]:
    """Shortest run of columns (wrapping) covering ``cols``, in left-to-right order."""
    if len(cols) == n_cols:
        return list(range(1, n_cols + 1))
    present = sorted(cols)
    # the span starts right after the largest circular gap
    best_gap, start = -1, present[0]
    for a, b in zip(present, present[1:] + [present[0] + n_cols]):
        gap = b - a - 1
        if gap > best_gap:
            best_gap, start = gap, b
    start = (start - 1) % n_cols + 1
    length = n_cols - best_gap
    return [(start - 1 + k) % n_cols + 1 for k in range(length)]


def select_tiles(p, grid: TileGrid, epsilon: float, protect: Optional[int] = None) -> FetchSet:
    """Bounding rectangle of the support of ``p``, with sub-epsilon edges trimmed.

    An edge row or column is removed when every tile on it (within the
    rectangle) has probability below ``epsilon``; this repeats until no edge
    qualifies. The row and column holding the most probable tile, and those
    holding ``protect`` if given, are never removed.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (grid.n_tiles,):
        raise ValueError(f"probability field has shape {p.shape}, expected ({grid.n_tiles},)")
    support = np.flatnonzero(p > 0) + 1
    if support.size == 0:
        raise ValueError("probability field is all zero")
    positions = [grid.position(int(i)) for i in support]
    rows = list(range(min(r for r, _ in positions), max(r for r, _ in positions) + 1))
    cols = _column_span({c for _, c in positions}, grid.cols)

    kept = [grid.position(int(np.argmax(p)) + 1)]
    if protect is not None:
        kept.append(grid.position(protect))
    keep_rows = {r for r, _ in kept}
    keep_cols = {c for _, c in kept}

    def weak(tiles):
        return all(p[i - 1] < epsilon for i in tiles)

    changed = True
    while changed:
        changed = False
        for side in ("top", "bottom", "left", "right"):
            if side in ("top", "bottom"):
                if len(rows) == 1:
                    continue
                r = rows[0] if side == "top" else rows[-1]
                if r not in keep_rows and weak([grid.index(r, c) for c in cols]):
                    rows.remove(r)
                    changed = True
            else:
                if len(cols) == 1:
                    continue
                c = cols[0] if side == "left" else cols[-1]
                if c not in keep_cols and weak([grid.index(r, c) for r in rows]):
                    cols.remove(c)
                    changed = True
    tiles = tuple(sorted(grid.index(r, c) for r in rows for c in cols))
    return FetchSet(tiles, tuple(rows), tuple(cols))
