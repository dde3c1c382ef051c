"""
City model and epoch data.

Buildings are convex extruded prisms: a convex footprint on the ground,
vertical walls and a flat roof. Bottom faces are never generated. The
receiver is assumed to sit on a horizontal plane at
``ground_z + receiver_height`` inside the area of interest (AOI).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Mapping

import numpy as np
import shapely
from shapely.geometry import Polygon
from shapely.geometry.polygon import orient

import config
from src.errors import GeometryError, SchemaError
from src.geometry.primitives import FaceSet, Plane3, Polygon3, Vec3, as_vec3
from src.geometry.regions import Region2, polygon2, region_boolean, union_all

logger = logging.getLogger(__name__)


class Visibility(str, Enum):
    """Observed signal class of one satellite."""

    LOS = "LOS"
    NLOS = "NLOS"


VisibilityVector = dict[str, Visibility]


# ---------------------------------------------------------------------------
# Buildings and faces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Face:
    """One planar building face with its outward normal."""

    face_id: str
    building_id: str
    polygon: Polygon3
    is_top: bool

    @property
    def plane(self) -> Plane3:
        return self.polygon.plane

    @property
    def normal(self) -> Vec3:
        return self.polygon.normal


@dataclass(frozen=True, eq=False)
class Building:
    """
    Convex prism building.

    Parameters
    ----------
    id : str
        Unique building identifier.
    footprint : shapely Polygon
        Convex ground footprint (reoriented counter-clockwise).
    base_z, top_z : float
        Wall bottom and roof elevation in metres, top_z > base_z.
    """

    id: str
    footprint: Polygon
    base_z: float
    top_z: float

    def __post_init__(self) -> None:
        fp = self.footprint
        if not isinstance(fp, Polygon):
            fp = polygon2(fp)
        fp = orient(shapely.remove_repeated_points(fp), sign=1.0)
        if fp.interiors or not fp.is_valid or fp.area <= 0.0:
            raise GeometryError(f"building {self.id}: footprint must be a simple polygon")
        if fp.convex_hull.area - fp.area > config.AREA_TOL:
            raise GeometryError("footprint must be convex")
        if not (np.isfinite(self.base_z) and np.isfinite(self.top_z)):
            raise GeometryError(f"building {self.id}: non-finite elevation")
        if self.top_z <= self.base_z:
            raise GeometryError(f"building {self.id}: top_z must exceed base_z")
        object.__setattr__(self, "footprint", fp)
        object.__setattr__(self, "base_z", float(self.base_z))
        object.__setattr__(self, "top_z", float(self.top_z))

    @property
    def height(self) -> float:
        return self.top_z - self.base_z

    def footprint_xy(self) -> np.ndarray:
        """Counter-clockwise footprint vertices, shape (k, 2), no closing repeat."""
        return np.asarray(self.footprint.exterior.coords)[:-1]


def building_faces(b: Building) -> list[Face]:
    """
    Walls and roof of a building, each with an outward normal.

    Wall i spans footprint edge v_i → v_{i+1}; its vertex loop
    (v_i low, v_{i+1} low, v_{i+1} high, v_i high) is counter-clockwise
    seen from outside, so its Newell normal points away from the prism.
    """
    xy = b.footprint_xy()
    k = len(xy)
    faces: list[Face] = []
    for i in range(k):
        (x0, y0), (x1, y1) = xy[i], xy[(i + 1) % k]
        loop = np.array(
            [
                [x0, y0, b.base_z],
                [x1, y1, b.base_z],
                [x1, y1, b.top_z],
                [x0, y0, b.top_z],
            ]
        )
        faces.append(Face(f"{b.id}:wall{i}", b.id, Polygon3(loop), is_top=False))
    roof = np.column_stack([xy, np.full(k, b.top_z)])
    faces.append(Face(f"{b.id}:roof", b.id, Polygon3(roof), is_top=True))
    return faces


# ---------------------------------------------------------------------------
# Scene
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Scene:
    """
    City model plus the receiver plane and area of interest.

    Derived geometry (faces, the stacked face set, free space) is computed
    once on first access.
    """

    buildings: tuple[Building, ...]
    aoi: Region2
    ground_z: float = 0.0
    receiver_height: float = config.RECEIVER_HEIGHT

    def __post_init__(self) -> None:
        object.__setattr__(self, "buildings", tuple(self.buildings))
        if self.aoi.is_empty:
            raise GeometryError("aoi must be non-empty")
        ids = [b.id for b in self.buildings]
        if len(set(ids)) != len(ids):
            raise GeometryError("building ids must be unique")
        low = [b.id for b in self.buildings if b.top_z <= self.receiver_plane_z]
        if low:
            logger.warning("Buildings at or below the receiver plane: %s", low)

    @property
    def receiver_plane_z(self) -> float:
        return self.ground_z + self.receiver_height

    @cached_property
    def faces(self) -> tuple[Face, ...]:
        return tuple(f for b in self.buildings for f in building_faces(b))

    @cached_property
    def face_set(self) -> FaceSet:
        return FaceSet([f.polygon for f in self.faces], ids=[f.face_id for f in self.faces])

    @cached_property
    def faces_by_id(self) -> dict[str, Face]:
        return {f.face_id: f for f in self.faces}

    @cached_property
    def free_space(self) -> Region2:
        """AOI minus building footprints."""
        footprints = union_all(Region2((b.footprint,)) for b in self.buildings)
        return region_boolean(self.aoi, footprints, "difference")

    @property
    def anchor(self) -> tuple[float, float]:
        """Shared linearisation anchor: the AOI centroid."""
        return self.aoi.centroid

    def lift(self, x: float, y: float) -> Vec3:
        """Point (x, y) on the receiver plane."""
        return as_vec3((x, y, self.receiver_plane_z))


# ---------------------------------------------------------------------------
# Epoch data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SatelliteObservation:
    """Satellite position (ENU, metres) and atmosphere-corrected pseudorange."""

    sat_id: str
    position: Vec3
    pseudorange: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", as_vec3(self.position))
        if np.linalg.norm(self.position) < config.FAR_FIELD_RANGE:
            raise SchemaError("pos", f"satellite {self.sat_id} closer than far-field range")
        if not np.isfinite(self.pseudorange) or self.pseudorange <= 0.0:
            raise SchemaError("pseudorange", f"must be a positive number for {self.sat_id}")
        object.__setattr__(self, "pseudorange", float(self.pseudorange))


@dataclass(frozen=True, eq=False)
class Truth:
    position: Vec3
    clock_bias: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", as_vec3(self.position))
        object.__setattr__(self, "clock_bias", float(self.clock_bias))


@dataclass(frozen=True, eq=False)
class Epoch:
    """Single-timestep observation set, optionally with ground truth."""

    observations: tuple[SatelliteObservation, ...]
    truth: Truth | None = field(default=None)

    def __post_init__(self) -> None:
        obs = tuple(self.observations)
        if not obs:
            raise SchemaError("observations", "at least one observation required")
        ids = [o.sat_id for o in obs]
        if len(set(ids)) != len(ids):
            raise SchemaError("observations", "sat_id values must be unique")
        object.__setattr__(self, "observations", obs)

    @property
    def sat_ids(self) -> list[str]:
        return [o.sat_id for o in self.observations]

    @property
    def positions(self) -> dict[str, Vec3]:
        return {o.sat_id: o.position for o in self.observations}

    def observation(self, sat_id: str) -> SatelliteObservation:
        for o in self.observations:
            if o.sat_id == sat_id:
                return o
        raise KeyError(sat_id)

    def sorted(self) -> Epoch:
        """Copy with observations in canonical sat_id order."""
        return replace(self, observations=tuple(sorted(self.observations, key=lambda o: o.sat_id)))

    def with_pseudoranges(self, pseudoranges: Mapping[str, float]) -> Epoch:
        """Copy with selected pseudoranges replaced."""
        obs = tuple(
            replace(o, pseudorange=pseudoranges.get(o.sat_id, o.pseudorange))
            for o in self.observations
        )
        return replace(self, observations=obs)
