"""Packet-queue and sickness-queue dynamics, plus the per-slot bandwidth budget."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

STALL = "stall"
SICKNESS_OVERFLOW = "sickness_overflow"

ROTATION_NORM = 100.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class QueueState:
    qp: float
    qs: float


class QueueUpdate(NamedTuple):
    value: float
    event: Optional[str]


def shrink_factor(s_fov: float, y_dof: int, k_dof: float) -> float:
    """Combined FoV-shrink and DoF-blur factor s_fov * (1 - k_dof * y_dof)."""
    return s_fov * (1.0 - k_dof * y_dof)


def _clamp01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def update_packet_queue(qp_prev, T, Cp, s_fov, y_dof, k_dof, gamma, Bt) -> QueueUpdate:
    """Advance the playback-buffer occupancy by one chunk.

    ``gamma`` is the megabits fetched for the chunk and ``Bt`` the bandwidth in
    Mbps. A stall is reported when the unclamped occupancy falls below zero.
    """
    if Bt <= 0:
        raise ValueError(f"bandwidth must be positive, got {Bt}")
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    raw = qp_prev + (T / Cp) * (1.0 - shrink_factor(s_fov, y_dof, k_dof) * gamma / Bt)
    return QueueUpdate(_clamp01(raw), STALL if raw < 0 else None)


def raw_bandwidth_budget(qp_prev, Bt, T, Cp, lam, s_fov, y_dof, k_dof) -> float:
    """Largest fetch size (megabits) that keeps the packet queue at or above ``lam``."""
    if Bt <= 0:
        raise ValueError(f"bandwidth must be positive, got {Bt}")
    return Bt * (Cp * (qp_prev - lam) + T) / (shrink_factor(s_fov, y_dof, k_dof) * T)


def bandwidth_budget(qp_prev, Bt, T, Cp, lam, s_fov, y_dof, k_dof, bw_unit) -> int:
    """Bandwidth budget in integer ``bw_unit`` steps, rounded half-up, floored at 0."""
    if bw_unit <= 0:
        raise ValueError("bw_unit must be positive")
    raw = raw_bandwidth_budget(qp_prev, Bt, T, Cp, lam, s_fov, y_dof, k_dof) / bw_unit
    return max(0, math.floor(raw + 0.5))


def rotation_term(omega_y: float, omega_p: float) -> float:
    return math.hypot(omega_y, omega_p) / ROTATION_NORM


def update_sickness_queue(qs_prev, omega_y, omega_p, expected_flow, s_fov, y_dof, k_dof, Cs, Omega) -> QueueUpdate:
    """Advance the sickness occupancy: stimulus in, adaptation drain ``Omega`` out."""
    if Cs <= 0:
        raise ValueError("Cs must be positive")
    stimulus = (rotation_term(omega_y, omega_p) + expected_flow) * shrink_factor(s_fov, y_dof, k_dof)
    raw = qs_prev + (stimulus - Omega) / Cs
    return QueueUpdate(_clamp01(raw), SICKNESS_OVERFLOW if raw >= 1.0 else None)
