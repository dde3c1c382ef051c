"""Shared pytest fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest
from shapely.geometry import box

from src.geometry.regions import Region2
from src.scene.model import Building, Epoch, SatelliteObservation, Scene
from src.shadow.matching import Mode, ModeSet

SAT_RANGE = 2.2e7


def far_sat(az_deg: float, el_deg: float, r: float = SAT_RANGE, origin=(0.0, 0.0, 0.0)) -> np.ndarray:
    """ENU position of a satellite at azimuth/elevation (degrees) and range r from origin."""
    az, el = np.radians(az_deg), np.radians(el_deg)
    d = np.array([np.cos(el) * np.sin(az), np.cos(el) * np.cos(az), np.sin(el)])
    return np.asarray(origin, dtype=float) + r * d


def make_epoch(
    sats: dict[str, np.ndarray],
    receiver: tuple[float, float, float],
    clock_bias: float = 100.0,
) -> Epoch:
    """Noise-free direct-path pseudoranges from ``receiver``."""
    rx = np.asarray(receiver, dtype=float)
    obs = [
        SatelliteObservation(sid, pos, float(np.linalg.norm(pos - rx)) + clock_bias)
        for sid, pos in sats.items()
    ]
    return Epoch(tuple(obs))


@pytest.fixture
def unit_box() -> Building:
    """1 m cube standing on the ground at the origin."""
    return Building("B", box(0.0, 0.0, 1.0, 1.0), 0.0, 1.0)


@pytest.fixture
def canyon_scene() -> Scene:
    """Straight east-west street 20 m wide between two 30 m buildings."""
    north = Building("N0", box(-50.0, 10.0, 50.0, 30.0), 0.0, 30.0)
    south = Building("S0", box(-50.0, -30.0, 50.0, -10.0), 0.0, 30.0)
    aoi = Region2.from_polygon([[-50, -10], [50, -10], [50, 10], [-50, 10]])
    return Scene((north, south), aoi)


@pytest.fixture
def two_mode_scene() -> Scene:
    """
    Two free-standing buildings in an open square.

    A satellite due north at 45° elevation is hidden behind each building
    in a separate patch south of it: 10 m × 20 m behind the 20 m building
    ``W`` and 10 m × 30 m behind the 30 m building ``E``.
    """
    west = Building("W", box(-30.0, -5.0, -20.0, 5.0), 0.0, 20.0)
    east = Building("E", box(20.0, -5.0, 30.0, 5.0), 0.0, 30.0)
    aoi = Region2.from_polygon([[-50, -50], [50, -50], [50, 50], [-50, 50]])
    return Scene((west, east), aoi)


@pytest.fixture
def north_sat() -> np.ndarray:
    return far_sat(0.0, 45.0)


# ---------------------------------------------------------------------------
# Two modes on the canyon centreline
# ---------------------------------------------------------------------------

WEST_RECEIVER = (-20.0, 0.0, 0.0)

# North-west azimuth whose reflection delay off the south block (2·10·u_y)
# equals the direct-range difference between the two street modes (-40·u_x).
SHIFTED_AZ = float(np.degrees(np.arctan2(-1.0, 2.0)) % 360.0)


def street_sats() -> dict[str, np.ndarray]:
    """
    Constellation over the canyon street.

    G01-G03 are high enough to clear both blocks from anywhere on the
    centreline and have no east-west component. G04 is hidden behind the
    north block and only arrives off the south block's north wall.
    """
    return {
        "G01": far_sat(0.0, 80.0),
        "G02": far_sat(180.0, 80.0),
        "G03": far_sat(0.0, 75.0),
        "G04": far_sat(SHIFTED_AZ, 60.0),
    }


def street_epoch(
    sats: dict[str, np.ndarray],
    reflected: tuple[str, ...] = (),
    receiver: tuple[float, float, float] = WEST_RECEIVER,
    clock_bias: float = 100.0,
) -> Epoch:
    """Noise-free canyon epoch; ``reflected`` satellites arrive off the wall at y = -10."""
    rx = np.asarray(receiver, dtype=float)
    prs = {}
    for sid in reflected:
        s = sats[sid]
        image = np.array([s[0], -20.0 - s[1], s[2]])
        prs[sid] = float(np.linalg.norm(image - rx)) + clock_bias
    return make_epoch(sats, receiver, clock_bias).with_pseudoranges(prs)


@pytest.fixture
def street_modes(canyon_scene) -> ModeSet:
    """1 m squares centred at x = -20 (mode 0) and x = 20 (mode 1) on the canyon centreline."""
    modes = (
        Mode(0, Region2((box(-20.5, -0.5, -19.5, 0.5),)), (-20.0, 0.0)),
        Mode(1, Region2((box(19.5, -0.5, 20.5, 0.5),)), (20.0, 0.0)),
    )
    return ModeSet(modes, canyon_scene.receiver_plane_z)
