"""
Satellite-pseudorange consistency (SPC) planes.

For a receiver on the plane z = z_r the range offset implied by one
pseudorange is

    b_ro(x, y) = ρ − |S − (x, y, z_r)|

which is a hyperboloid-like surface over the ground plane. At urban scale
and GNSS ranges it is indistinguishable from its tangent plane at the
anchor (x0, y0):

    b_ro(x, y) ≈ a_x·(x − x0) + a_y·(y − y0) + c

with (a_x, a_y) the horizontal components of the unit line-of-sight vector
and c = ρ − r0. Projecting a mode through this plane gives the mode's
range-offset interval for that satellite.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

import config
from src.errors import GeometryError
from src.geometry.regions import linear_extremes
from src.scene.io import write_text_atomic
from src.scene.model import Epoch, SatelliteObservation
from src.shadow.matching import Mode, ModeSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpcPlane:
    """Tangent-plane linearisation of one satellite's range-offset surface."""

    sat_id: str
    a_x: float
    a_y: float
    c: float
    anchor: tuple[float, float]

    def __post_init__(self) -> None:
        if not all(np.isfinite([self.a_x, self.a_y, self.c])):
            raise GeometryError(f"SPC plane for {self.sat_id} has non-finite coefficients")
        if np.hypot(self.a_x, self.a_y) > 1.0 + 1e-12:
            raise GeometryError(f"SPC plane for {self.sat_id}: slope exceeds 1")

    def offset(self, x: ArrayLike, y: ArrayLike) -> np.ndarray:
        """Linearised range offset at receiver-plane position(s)."""
        x0, y0 = self.anchor
        return self.a_x * (np.asarray(x) - x0) + self.a_y * (np.asarray(y) - y0) + self.c


@dataclass(frozen=True)
class RangeOffsetInterval:
    """Range offsets one satellite's SPC plane assigns to one mode."""

    sat_id: str
    mode_id: int
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"interval lo > hi for ({self.sat_id}, {self.mode_id})")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


def exact_range_offset(
    obs: SatelliteObservation,
    x: ArrayLike,
    y: ArrayLike,
    receiver_plane_z: float,
) -> np.ndarray:
    """Un-linearised range offset ρ − |S − (x, y, z_r)|."""
    s = obs.position
    dx = s[0] - np.asarray(x, dtype=float)
    dy = s[1] - np.asarray(y, dtype=float)
    dz = s[2] - receiver_plane_z
    return obs.pseudorange - np.sqrt(dx * dx + dy * dy + dz * dz)


def build_spc_plane(
    obs: SatelliteObservation,
    anchor: tuple[float, float],
    receiver_plane_z: float,
    far_field: float = config.FAR_FIELD_RANGE,
) -> SpcPlane:
    """
    Tangent plane of the range-offset surface at the anchor.

    Parameters
    ----------
    obs : SatelliteObservation
        Satellite position and pseudorange.
    anchor : (float, float)
        Linearisation point (x0, y0) on the receiver plane.
    receiver_plane_z : float
        Receiver plane elevation.
    far_field : float
        Minimum anchor-to-satellite distance.

    Returns
    -------
    SpcPlane
    """
    x0, y0 = anchor
    d = obs.position - np.array([x0, y0, receiver_plane_z])
    r0 = float(np.linalg.norm(d))
    if r0 < far_field:
        raise GeometryError(
            f"satellite {obs.sat_id} is {r0:.0f} m from the anchor, below far-field range {far_field:.0f} m"
        )
    u = d / r0
    return SpcPlane(obs.sat_id, float(u[0]), float(u[1]), obs.pseudorange - r0, (x0, y0))


def build_planes(
    epoch: Epoch,
    anchor: tuple[float, float],
    receiver_plane_z: float,
) -> list[SpcPlane]:
    return [build_spc_plane(o, anchor, receiver_plane_z) for o in epoch.observations]


def project_mode(plane: SpcPlane, mode: Mode) -> RangeOffsetInterval:
    """Range-offset interval of ``mode`` through ``plane``."""
    x0, y0 = plane.anchor
    lo, hi = linear_extremes(
        mode.region,
        plane.a_x,
        plane.a_y,
        plane.c - plane.a_x * x0 - plane.a_y * y0,
    )
    return RangeOffsetInterval(plane.sat_id, mode.id, lo, hi)


def project_modes(
    planes: Sequence[SpcPlane],
    mode_set: ModeSet,
) -> list[list[RangeOffsetInterval]]:
    """Intervals for every (satellite, mode): ``out[s][m]``."""
    return [[project_mode(p, m) for m in mode_set] for p in planes]


def write_spc_debug_csv(
    planes: Sequence[SpcPlane],
    intervals: Sequence[Sequence[RangeOffsetInterval]],
    path: str | Path,
) -> Path:
    """Dump planes and their per-mode intervals: sat_id, mode_id, a_x, a_y, c, lo, hi."""
    rows = [
        {
            "sat_id": plane.sat_id,
            "mode_id": iv.mode_id,
            "a_x": plane.a_x,
            "a_y": plane.a_y,
            "c": plane.c,
            "lo": iv.lo,
            "hi": iv.hi,
        }
        for plane, per_mode in zip(planes, intervals)
        for iv in per_mode
    ]
    df = pd.DataFrame(rows, columns=["sat_id", "mode_id", "a_x", "a_y", "c", "lo", "hi"])
    return write_text_atomic(path, df.to_csv(index=False, float_format="%.17g"))
