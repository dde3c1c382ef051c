"""
Deterministic synthetic urban-canyon scenarios.

A scene is a straight east-west street (the AOI) flanked on both sides by
rectangular buildings separated by side alleys. An epoch places the
receiver at a random free-space point, draws a constellation, and inverts
the pseudorange model

    ρ = geometric path length + clock bias + ε

where the geometric path is the direct range for LOS satellites and the
shortest single-reflection path for NLOS satellites. NLOS satellites with
no reflection path are not tracked.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np
from shapely.geometry import box

import config
from src.errors import NoFeasibleRegionError, SchemaError, SimulationError
from src.geometry.primitives import segment_occluded
from src.geometry.regions import Region2
from src.inference.rng import RandomStream
from src.multipath.reflection import find_paths, shortest_path
from src.scene.model import (
    Building,
    Epoch,
    SatelliteObservation,
    Scene,
    Truth,
    Visibility,
    VisibilityVector,
)
from src.shadow.matching import ModeSet, modes_from_visibility

logger = logging.getLogger(__name__)

_RANGE_FIELDS = (
    "building_height_range",
    "building_length_range",
    "building_depth_range",
    "gap_range",
    "street_width_range",
    "elevation_range_deg",
    "satellite_range",
)
_INT_FIELDS = ("seed", "n_buildings", "n_satellites")


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class SimConfig:
    """
    Scenario generator parameters.

    Attributes
    ----------
    seed : int
        Root seed of every random stream in a run.
    n_buildings : int
        Buildings placed along the street, split between both sides.
    building_height_range, building_length_range, building_depth_range : (float, float)
        Uniform ranges (m) for roof height, frontage and depth.
    gap_range : (float, float)
        Side-alley widths (m) between neighbouring buildings.
    street_width_range : (float, float)
        Street (AOI) width range (m).
    aoi_size : float
        Street length (m) inside the AOI.
    n_satellites : int
        Satellites drawn per epoch before NLOS dropouts.
    elevation_range_deg : (float, float)
        Satellite elevation range.
    satellite_range : (float, float)
        Satellite distance range (m).
    clock_bias : float
        Receiver clock bias (m).
    noise_sigma : float
        Pseudorange noise standard deviation (m).
    mislabel_rate : float
        Probability of flipping each satellite's visibility label.
    receiver_height : float
        Receiver height above ground (m).
    """

    seed: int = config.SIM_SEED
    n_buildings: int = config.N_BUILDINGS
    building_height_range: tuple[float, float] = config.BUILDING_HEIGHT_RANGE
    building_length_range: tuple[float, float] = config.BUILDING_LENGTH_RANGE
    building_depth_range: tuple[float, float] = config.BUILDING_DEPTH_RANGE
    gap_range: tuple[float, float] = config.GAP_RANGE
    street_width_range: tuple[float, float] = config.STREET_WIDTH_RANGE
    aoi_size: float = config.AOI_SIZE
    n_satellites: int = config.N_SATELLITES
    elevation_range_deg: tuple[float, float] = config.ELEVATION_RANGE_DEG
    satellite_range: tuple[float, float] = config.SATELLITE_RANGE
    clock_bias: float = config.CLOCK_BIAS
    noise_sigma: float = config.NOISE_SIGMA
    mislabel_rate: float = config.MISLABEL_RATE
    receiver_height: float = config.RECEIVER_HEIGHT

    def __post_init__(self) -> None:
        for name in _RANGE_FIELDS:
            lo, hi = (float(v) for v in getattr(self, name))
            if not lo <= hi:
                raise SchemaError(name, f"lower bound {lo} exceeds upper bound {hi}")
            setattr(self, name, (lo, hi))
        if self.n_buildings < 0:
            raise SchemaError("n_buildings", "must be >= 0")
        if self.n_satellites < 1:
            raise SchemaError("n_satellites", "must be >= 1")
        if self.aoi_size <= 0:
            raise SchemaError("aoi_size", "must be > 0")
        if self.street_width_range[0] <= 0:
            raise SchemaError("street_width_range", "must be > 0")
        if self.building_height_range[0] <= 0:
            raise SchemaError("building_height_range", "must be > 0")
        if self.noise_sigma < 0:
            raise SchemaError("noise_sigma", "must be >= 0")
        if not 0.0 <= self.mislabel_rate < 1.0:
            raise SchemaError("mislabel_rate", "must be in [0, 1)")
        el_lo, el_hi = self.elevation_range_deg
        if el_lo <= 0.0 or el_hi >= 90.0:
            raise SchemaError("elevation_range_deg", "must lie inside (0, 90)")
        if self.satellite_range[0] < config.FAR_FIELD_RANGE:
            raise SchemaError("satellite_range", "must be at least the far-field range")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SimConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise SchemaError(unknown[0], f"unknown config key (allowed: {sorted(known)})")
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key in _RANGE_FIELDS:
                if (
                    not isinstance(value, (list, tuple))
                    or len(value) != 2
                    or not all(_is_number(v) for v in value)
                ):
                    raise SchemaError(key, f"must be a [low, high] pair of numbers, got {value!r}")
                kwargs[key] = tuple(value)
            elif key in _INT_FIELDS:
                if not isinstance(value, int) or isinstance(value, bool):
                    raise SchemaError(key, f"must be an integer, got {value!r}")
                kwargs[key] = value
            else:
                if not _is_number(value):
                    raise SchemaError(key, f"must be a number, got {value!r}")
                kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


# ---------------------------------------------------------------------------
# Scene generation
# ---------------------------------------------------------------------------


def _place_side(
    cfg: SimConfig,
    gen: np.random.Generator,
    count: int,
    street_edge: float,
    direction: int,
    prefix: str,
) -> list[Building]:
    """Buildings along one side of the street, walking east from the AOI's west end."""
    buildings: list[Building] = []
    x = -0.5 * cfg.aoi_size - gen.uniform(0.0, cfg.building_length_range[1])
    for i in range(count):
        length = gen.uniform(*cfg.building_length_range)
        depth = gen.uniform(*cfg.building_depth_range)
        height = gen.uniform(*cfg.building_height_range)
        near = street_edge
        far = street_edge + direction * depth
        footprint = box(x, min(near, far), x + length, max(near, far))
        buildings.append(Building(f"{prefix}{i}", footprint, 0.0, height))
        x += length + gen.uniform(*cfg.gap_range)
    return buildings


def generate_scene(cfg: SimConfig, rng: RandomStream) -> Scene:
    """
    Street-canyon scene, reproducible from the stream.

    Parameters
    ----------
    cfg : SimConfig
        Generator parameters.
    rng : RandomStream
        Scene stream; each placement attempt uses its own sub-stream.

    Returns
    -------
    Scene
    """
    for attempt in range(config.MAX_PLACEMENT_RETRIES):
        gen = rng.spawn(attempt).generator()
        width = gen.uniform(*cfg.street_width_range)
        half_w = 0.5 * width
        half_l = 0.5 * cfg.aoi_size
        n_north = (cfg.n_buildings + 1) // 2
        n_south = cfg.n_buildings // 2
        buildings = _place_side(cfg, gen, n_north, half_w, +1, "N")
        buildings += _place_side(cfg, gen, n_south, -half_w, -1, "S")
        if _pairwise_disjoint(buildings):
            aoi = Region2.from_polygon([[-half_l, -half_w], [half_l, -half_w], [half_l, half_w], [-half_l, half_w]])
            scene = Scene(tuple(buildings), aoi, ground_z=0.0, receiver_height=cfg.receiver_height)
            logger.info(
                "Generated scene: %d buildings, street %.1f m × %.1f m",
                len(buildings),
                cfg.aoi_size,
                width,
            )
            return scene
        logger.debug("placement attempt %d produced overlapping buildings", attempt)
    raise SimulationError("scene generation failed")


def _pairwise_disjoint(buildings: list[Building]) -> bool:
    for i, a in enumerate(buildings):
        for b in buildings[i + 1 :]:
            if a.footprint.intersection(b.footprint).area > config.DEGENERATE_AREA:
                return False
    return True


# ---------------------------------------------------------------------------
# Constellation and truth
# ---------------------------------------------------------------------------


def generate_constellation(
    cfg: SimConfig,
    gen: np.random.Generator,
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> dict[str, np.ndarray]:
    """
    Satellites with stratified azimuths and uniform elevations and ranges.

    Returns
    -------
    dict sat_id → ENU position
    """
    n = cfg.n_satellites
    az = 2.0 * np.pi * (np.arange(n) + gen.uniform(0.0, 1.0, n)) / n
    el = np.radians(gen.uniform(*cfg.elevation_range_deg, n))
    rng_m = gen.uniform(*cfg.satellite_range, n)
    directions = np.column_stack([np.cos(el) * np.sin(az), np.cos(el) * np.cos(az), np.sin(el)])
    positions = np.asarray(origin, dtype=float)[None, :] + directions * rng_m[:, None]
    return {f"G{i + 1:02d}": positions[i] for i in range(n)}


def draw_truth(scene: Scene, gen: np.random.Generator) -> tuple[float, float]:
    """Uniform receiver position in free space by rejection sampling."""
    region = scene.free_space
    minx, miny, maxx, maxy = region.bounds
    for _ in range(config.MAX_TRUTH_DRAWS):
        x, y = gen.uniform(minx, maxx), gen.uniform(miny, maxy)
        if bool(region.contains(x, y)):
            return (float(x), float(y))
    raise SimulationError("could not place the receiver in free space")


# ---------------------------------------------------------------------------
# Epoch synthesis
# ---------------------------------------------------------------------------


@dataclass
class SatelliteTruth:
    """How a satellite's pseudorange was synthesised."""

    kind: str  # "direct" | "reflected" | "no_path"
    path_length: float | None = None
    face_id: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.path_length is not None:
            out["path_length"] = self.path_length
        if self.face_id is not None:
            out["face_id"] = self.face_id
        return out


@dataclass
class LabeledEpoch:
    """Synthesised epoch with its ground truth."""

    epoch: Epoch
    visibility: VisibilityVector
    truth_mode_id: int | None
    sat_truth: dict[str, SatelliteTruth]
    mode_set: ModeSet | None = field(default=None, repr=False)

    def labels(self) -> dict[str, Any]:
        return {
            "truth_mode_id": self.truth_mode_id,
            "sats": {sid: t.to_dict() for sid, t in sorted(self.sat_truth.items())},
        }


def synthesize_epoch(
    scene: Scene,
    truth_pos: tuple[float, float],
    cfg: SimConfig,
    rng: RandomStream,
    sats: dict[str, np.ndarray] | None = None,
) -> LabeledEpoch:
    """
    Forward-model one epoch from a known receiver position.

    Parameters
    ----------
    scene : Scene
        City model.
    truth_pos : (float, float)
        Receiver position on the receiver plane; must lie in the AOI.
    cfg : SimConfig
        Clock bias, noise, mislabel rate and constellation parameters.
    rng : RandomStream
        Epoch synthesis stream.
    sats : dict sat_id → position or None
        Fixed constellation; drawn from ``rng`` when None.

    Returns
    -------
    LabeledEpoch
    """
    if not bool(scene.aoi.contains(*truth_pos)):
        raise SimulationError(f"truth position {truth_pos} lies outside the AOI")
    gen = rng.generator()
    if sats is None:
        ax, ay = scene.anchor
        sats = generate_constellation(cfg, gen, (ax, ay, scene.receiver_plane_z))
    sat_ids = sorted(sats)
    noise = gen.normal(0.0, 1.0, len(sat_ids)) * cfg.noise_sigma
    flips = gen.uniform(0.0, 1.0, len(sat_ids)) < cfg.mislabel_rate

    receiver = scene.lift(*truth_pos)
    observations: list[SatelliteObservation] = []
    visibility: VisibilityVector = {}
    sat_truth: dict[str, SatelliteTruth] = {}
    for sid, eps, flip in zip(sat_ids, noise, flips):
        pos = np.asarray(sats[sid], dtype=float)
        direct = float(np.linalg.norm(pos - receiver))
        if not segment_occluded(receiver, pos, scene.face_set):
            geometric, truth_class = direct, Visibility.LOS
            sat_truth[sid] = SatelliteTruth("direct", direct)
        else:
            tracked = SatelliteObservation(sid, pos, direct)
            best = shortest_path(find_paths(scene, receiver, tracked))
            if best is None:
                sat_truth[sid] = SatelliteTruth("no_path")
                logger.debug("%s NLOS without reflection path: not tracked", sid)
                continue
            geometric, truth_class = best.length, Visibility.NLOS
            sat_truth[sid] = SatelliteTruth("reflected", best.length, best.face_id)
        observations.append(SatelliteObservation(sid, pos, geometric + cfg.clock_bias + float(eps)))
        if flip:
            truth_class = Visibility.NLOS if truth_class is Visibility.LOS else Visibility.LOS
        visibility[sid] = truth_class

    if len(observations) < config.MIN_SATELLITES:
        raise SimulationError("insufficient constellation")

    epoch = Epoch(tuple(observations), Truth(receiver, cfg.clock_bias))
    try:
        mode_set = modes_from_visibility(scene, visibility, epoch.positions)
        truth_mode_id = mode_set.locate(*truth_pos)
    except NoFeasibleRegionError:
        mode_set, truth_mode_id = None, None
    return LabeledEpoch(epoch, visibility, truth_mode_id, sat_truth, mode_set)
