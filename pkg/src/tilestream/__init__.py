"""Cybersickness-aware tile-based 360-degree video streaming simulator."""

from .config import Config, ValidationError

__all__ = ["Config", "ValidationError"]
