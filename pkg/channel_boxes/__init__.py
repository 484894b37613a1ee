"""Distinguishability of quantum channel boxes: divergences, transformations and protocols."""

from .config import Settings, load_settings

__all__ = ["Settings", "load_settings"]
