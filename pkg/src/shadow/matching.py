"""
Simplified shadow matching on the receiver plane.

A building's GNSS shadow is the set of receiver-plane points whose line of
sight to the satellite passes through the building. For a convex prism this
is the central projection of the prism (from the satellite) onto the
receiver plane, i.e. the convex hull of the projected cross-section and
roof vertices. Intersecting the shadows of NLOS satellites and removing
those of LOS satellites from the free space yields the multi-modal
position set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Mapping

import numpy as np
import shapely
from numpy.typing import ArrayLike

import config
from src.errors import GeometryError, NoFeasibleRegionError, SchemaError
from src.geometry.primitives import Vec3, as_vec3, segment_occluded
from src.geometry.regions import Region2, convex_hull, polygon2, region_boolean, union_all
from src.scene.io import read_json, write_json_atomic
from src.scene.model import Scene, Visibility, VisibilityVector

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Modes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Mode:
    """One connected component of the set-valued position."""

    id: int
    region: Region2
    centroid: tuple[float, float]

    @property
    def area(self) -> float:
        return self.region.area


@dataclass(frozen=True, eq=False)
class ModeSet:
    """
    Disjoint modes on the receiver plane, ordered by descending area.

    Parameters
    ----------
    modes : tuple of Mode
        Mode ``i`` has id ``i``.
    receiver_plane_z : float
        Elevation of the plane the modes live on.
    sat_ids : tuple of str
        Satellites whose visibility produced the modes (empty when unknown).
    """

    modes: tuple[Mode, ...]
    receiver_plane_z: float
    sat_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        modes = tuple(self.modes)
        if not modes:
            raise NoFeasibleRegionError()
        for i, m in enumerate(modes):
            if m.id != i:
                raise GeometryError(f"mode ids must be 0..M-1 in order, got {m.id} at {i}")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "sat_ids", tuple(self.sat_ids))

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self) -> Iterator[Mode]:
        return iter(self.modes)

    def __getitem__(self, mode_id: int) -> Mode:
        return self.modes[mode_id]

    @property
    def total_area(self) -> float:
        return sum(m.area for m in self.modes)

    def locate(self, x: float, y: float) -> int | None:
        """Id of the mode containing (x, y), or None."""
        for m in self.modes:
            if bool(m.region.contains(x, y)):
                return m.id
        return None


def mode_centroid(region: Region2) -> tuple[float, float]:
    """
    Candidate receiver position for a mode.

    The area-weighted centroid when it lies inside the region; otherwise
    the centroid of the largest triangle of a constrained Delaunay
    triangulation of the region's pieces.
    """
    cx, cy = region.centroid
    if bool(shapely.contains_xy(region.geometry, cx, cy)):
        return (cx, cy)
    best, best_area = None, -1.0
    for piece in region.pieces:
        for tri in shapely.get_parts(shapely.constrained_delaunay_triangles(piece)):
            if tri.area > best_area:
                best, best_area = tri, tri.area
    c = best.centroid
    return (float(c.x), float(c.y))


# ---------------------------------------------------------------------------
# Shadows
# ---------------------------------------------------------------------------


def elevation_from(point: ArrayLike, sat: ArrayLike) -> float:
    """Elevation angle (radians) of ``sat`` seen from ``point``."""
    d = as_vec3(sat) - as_vec3(point)
    return float(np.arcsin(d[2] / np.linalg.norm(d)))


def _project_to_plane(points: np.ndarray, sat: Vec3, z: float) -> np.ndarray:
    """Central projection of 3D points from ``sat`` onto the plane at height z."""
    scale = (sat[2] - z) / (sat[2] - points[:, 2])
    return sat[None, :2] + (points[:, :2] - sat[None, :2]) * scale[:, None]


def shadow_region(scene: Scene, sat: ArrayLike) -> Region2:
    """
    Receiver-plane region from which ``sat`` is blocked by some building.

    Parameters
    ----------
    scene : Scene
        City model.
    sat : array-like (3,)
        Satellite position (ENU, metres).

    Returns
    -------
    Region2
        Union of per-building shadows clipped to the AOI (possibly empty).
    """
    s = as_vec3(sat)
    zr = scene.receiver_plane_z
    ax, ay = scene.anchor
    if elevation_from((ax, ay, zr), s) <= 0.0:
        raise GeometryError("satellite below horizon")

    hulls: list[Region2] = []
    for b in scene.buildings:
        if b.top_z <= zr:
            continue
        if s[2] <= b.top_z:
            raise GeometryError("satellite below horizon")
        xy = b.footprint_xy()
        k = len(xy)
        lower = max(b.base_z, zr)
        prism = np.vstack(
            [
                np.column_stack([xy, np.full(k, lower)]),
                np.column_stack([xy, np.full(k, b.top_z)]),
            ]
        )
        hull = convex_hull(_project_to_plane(prism, s, zr))
        if hull is not None:
            hulls.append(Region2((hull,)))
    if not hulls:
        return Region2.empty()
    return region_boolean(union_all(hulls), scene.aoi, "intersection")


def classify_los(scene: Scene, p: ArrayLike, sat: ArrayLike) -> Visibility:
    """LOS/NLOS class of ``sat`` for a receiver at (x, y) on the receiver plane."""
    x, y = np.asarray(p, dtype=float)[:2]
    blocked = segment_occluded(scene.lift(x, y), sat, scene.face_set)
    return Visibility.NLOS if blocked else Visibility.LOS


def classify_points(scene: Scene, xy: ArrayLike, sat: ArrayLike) -> np.ndarray:
    """Vectorised ``classify_los``: True where the satellite is NLOS."""
    pts = np.atleast_2d(np.asarray(xy, dtype=float))
    starts = np.column_stack([pts[:, :2], np.full(len(pts), scene.receiver_plane_z)])
    return scene.face_set.occluded(starts, as_vec3(sat))


def modes_from_visibility(
    scene: Scene,
    vis: Mapping[str, Visibility | str],
    sats: Mapping[str, ArrayLike],
    min_mode_area: float = config.MIN_MODE_AREA,
) -> ModeSet:
    """
    Intersect visibility constraints over the free space of the AOI.

    Parameters
    ----------
    scene : Scene
        City model.
    vis : mapping sat_id → LOS/NLOS
        Observed signal classes.
    sats : mapping sat_id → position
        Satellite positions; must cover every key of ``vis``.
    min_mode_area : float
        Components smaller than this (m²) are dropped.

    Returns
    -------
    ModeSet
        Modes ordered by descending area (ties by centroid x, then y).
    """
    missing = sorted(set(vis) - set(sats))
    if missing:
        raise GeometryError(f"no satellite position for {missing}")

    region = scene.free_space
    for sat_id in sorted(vis):
        shadow = shadow_region(scene, sats[sat_id])
        if Visibility(vis[sat_id]) is Visibility.LOS:
            region = region_boolean(region, shadow, "difference")
        else:
            region = region_boolean(region, shadow, "intersection")
        if region.is_empty:
            break

    components = [c for c in region.components() if c.area >= min_mode_area]
    if not components:
        raise NoFeasibleRegionError()

    keyed = []
    for comp in components:
        cx, cy = mode_centroid(comp)
        keyed.append((-comp.area, cx, cy, comp))
    keyed.sort(key=lambda item: item[:3])

    modes = tuple(Mode(i, comp, (cx, cy)) for i, (_, cx, cy, comp) in enumerate(keyed))
    logger.debug(
        "Shadow matching: %d modes, areas %s",
        len(modes),
        [round(m.area, 1) for m in modes],
    )
    return ModeSet(modes, scene.receiver_plane_z, tuple(sorted(vis)))


def visibility_at(scene: Scene, p: ArrayLike, sats: Mapping[str, ArrayLike]) -> VisibilityVector:
    """Geometric visibility vector of all satellites from a receiver-plane point."""
    return {sid: classify_los(scene, p, pos) for sid, pos in sats.items()}


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _ring_list(coords: Any) -> list[list[float]]:
    return [[float(x), float(y)] for x, y in list(coords)[:-1]]


def _polygon_entry(poly: shapely.Polygon) -> dict[str, Any]:
    entry: dict[str, Any] = {"polygon": _ring_list(poly.exterior.coords)}
    if poly.interiors:
        entry["holes"] = [_ring_list(r.coords) for r in poly.interiors]
    return entry


def mode_set_to_dict(mode_set: ModeSet) -> dict[str, Any]:
    modes = []
    for m in mode_set:
        parts = sorted(
            shapely.get_parts(m.region.geometry), key=lambda g: g.area, reverse=True
        )
        entry: dict[str, Any] = {"id": m.id}
        entry.update(_polygon_entry(parts[0]))
        if len(parts) > 1:
            entry["parts"] = [_polygon_entry(p) for p in parts[1:]]
        entry["centroid"] = [float(m.centroid[0]), float(m.centroid[1])]
        modes.append(entry)
    out: dict[str, Any] = {"receiver_plane_z": mode_set.receiver_plane_z, "modes": modes}
    if mode_set.sat_ids:
        out["sat_ids"] = list(mode_set.sat_ids)
    return out


def _polygon_from_entry(entry: Any, where: str) -> shapely.Polygon:
    if not isinstance(entry, dict) or "polygon" not in entry:
        raise SchemaError(f"{where}.polygon", "is required")
    try:
        shell = polygon2(entry["polygon"])
        holes = [polygon2(h) for h in entry.get("holes", [])]
    except (GeometryError, TypeError, ValueError) as exc:
        raise SchemaError(f"{where}.polygon", str(exc)) from exc
    if not holes:
        return shell
    return shapely.Polygon(shell.exterior.coords, [h.exterior.coords for h in holes])


def mode_set_from_dict(data: dict[str, Any]) -> ModeSet:
    if not isinstance(data, dict):
        raise SchemaError("modes", "must be a JSON object")
    raw_modes = data.get("modes")
    if not isinstance(raw_modes, list) or not raw_modes:
        raise SchemaError("modes", "must be a non-empty list")
    zr = data.get("receiver_plane_z")
    if isinstance(zr, bool) or not isinstance(zr, (int, float)):
        raise SchemaError("receiver_plane_z", "must be a number")

    modes: list[Mode] = []
    for i, raw in enumerate(raw_modes):
        where = f"modes[{i}]"
        if not isinstance(raw, dict) or raw.get("id") != i:
            raise SchemaError(f"{where}.id", f"must equal {i}")
        polys = [_polygon_from_entry(raw, where)]
        for j, part in enumerate(raw.get("parts", [])):
            polys.append(_polygon_from_entry(part, f"{where}.parts[{j}]"))
        region = Region2.from_geometry(shapely.union_all(polys))
        centroid = raw.get("centroid")
        if not isinstance(centroid, list) or len(centroid) != 2:
            raise SchemaError(f"{where}.centroid", "must be [x, y]")
        modes.append(Mode(i, region, (float(centroid[0]), float(centroid[1]))))
    sat_ids = tuple(str(s) for s in data.get("sat_ids", []))
    return ModeSet(tuple(modes), float(zr), sat_ids)


def save_mode_set(mode_set: ModeSet, path: str | Path) -> Path:
    return write_json_atomic(path, mode_set_to_dict(mode_set))


def load_mode_set(path: str | Path) -> ModeSet:
    return mode_set_from_dict(read_json(path))
