"""Numerical tolerances shared by every module."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    metric: float = 1e-9
    roundtrip: float = 1e-12
    disk_margin: float = 1e-12
    continuity: float = 1e-8
    holonomy: float = 1e-8
    collinear: float = 1e-6


TOL = Tolerances()
