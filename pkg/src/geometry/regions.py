"""
Polygonal regions on the receiver plane.

A ``Region2`` is a set of hole-free simple polygons with pairwise disjoint
interiors. Boolean operations are exact GEOS overlays (shapely); holes
produced by differences are removed by cutting the polygon vertically
through each hole, so every stored piece stays simple.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Literal, Sequence

import numpy as np
import shapely
from numpy.typing import ArrayLike
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from shapely.geometry import GeometryCollection, MultiPolygon, Polygon, box
from shapely.geometry.base import BaseGeometry
from shapely.geometry.polygon import orient

import config
from src.errors import GeometryError

logger = logging.getLogger(__name__)

BooleanOp = Literal["intersection", "difference", "union"]

_OVERLAYS = {
    "intersection": shapely.intersection,
    "difference": shapely.difference,
    "union": shapely.union,
}


def polygon2(vertices: ArrayLike) -> Polygon:
    """
    Build a simple counter-clockwise polygon from an (n, 2) vertex list.

    A repeated closing vertex is accepted. Clockwise input is reoriented.
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise GeometryError(f"polygon vertices must have shape (n, 2), got {v.shape}")
    if len(v) > 1 and np.array_equal(v[0], v[-1]):
        v = v[:-1]
    if len(v) < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    if not np.all(np.isfinite(v)):
        raise GeometryError("polygon has non-finite vertices")
    poly = Polygon(v)
    if not poly.is_valid:
        raise GeometryError(f"polygon is not simple: {shapely.is_valid_reason(poly)}")
    if poly.area <= 0.0:
        raise GeometryError("polygon has zero area")
    return orient(poly, sign=1.0)


def _polygonal_parts(geom: BaseGeometry) -> list[Polygon]:
    """Flatten any geometry to its polygon parts, dropping lines and points."""
    if geom.is_empty:
        return []
    if isinstance(geom, Polygon):
        return [geom]
    if isinstance(geom, (MultiPolygon, GeometryCollection)):
        out: list[Polygon] = []
        for part in geom.geoms:
            out.extend(_polygonal_parts(part))
        return out
    return []


def _split_holes(poly: Polygon) -> list[Polygon]:
    """Cut a polygon with holes into hole-free pieces covering the same area."""
    if not poly.interiors:
        return [poly]
    hole = poly.interiors[0]
    hx_min, _, hx_max, _ = hole.bounds
    cut_x = 0.5 * (hx_min + hx_max)
    minx, miny, maxx, maxy = poly.bounds
    halves = (
        box(minx - 1.0, miny - 1.0, cut_x, maxy + 1.0),
        box(cut_x, miny - 1.0, maxx + 1.0, maxy + 1.0),
    )
    pieces: list[Polygon] = []
    for half in halves:
        for part in _polygonal_parts(poly.intersection(half)):
            if part.area > config.DEGENERATE_AREA:
                pieces.extend(_split_holes(part))
    return pieces


# ---------------------------------------------------------------------------
# Region
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Region2:
    """
    Union of hole-free simple polygons with disjoint interiors.

    Parameters
    ----------
    pieces : tuple of shapely Polygon
        Pieces of the region. An empty tuple is the explicit empty region.
    """

    pieces: tuple[Polygon, ...] = ()

    def __post_init__(self) -> None:
        pieces = tuple(self.pieces)
        for p in pieces:
            if not isinstance(p, Polygon):
                raise GeometryError(f"region piece must be a Polygon, got {type(p).__name__}")
            if p.interiors:
                raise GeometryError("region pieces must be hole-free")
            if p.area <= 0.0:
                raise GeometryError("region piece has zero area")
        object.__setattr__(self, "pieces", tuple(orient(p, sign=1.0) for p in pieces))

    # ── Constructors ──

    @classmethod
    def empty(cls) -> Region2:
        return cls(())

    @classmethod
    def from_polygon(cls, vertices: ArrayLike) -> Region2:
        return cls((polygon2(vertices),))

    @classmethod
    def from_geometry(cls, geom: BaseGeometry) -> Region2:
        """
        Convert any shapely geometry into a region.

        Overlapping parts are unioned, non-polygonal parts and slivers below
        ``config.DEGENERATE_AREA`` are dropped, and holes are cut away.
        """
        polys = _polygonal_parts(geom)
        if not polys:
            return cls.empty()
        if len(polys) > 1:
            polys = _polygonal_parts(shapely.union_all(polys))
        pieces: list[Polygon] = []
        for poly in polys:
            if poly.area <= config.DEGENERATE_AREA:
                continue
            pieces.extend(p for p in _split_holes(poly) if p.area > config.DEGENERATE_AREA)
        return cls(tuple(pieces))

    # ── Properties ──

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    @property
    def area(self) -> float:
        return float(sum(p.area for p in self.pieces))

    @cached_property
    def geometry(self) -> BaseGeometry:
        """The region as a single shapely geometry (holes restored)."""
        if self.is_empty:
            return Polygon()
        if len(self.pieces) == 1:
            return self.pieces[0]
        return shapely.union_all(self.pieces)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        if self.is_empty:
            raise GeometryError("empty region has no bounds")
        return tuple(self.geometry.bounds)

    @property
    def centroid(self) -> tuple[float, float]:
        """Area-weighted centroid; may fall outside a non-convex region."""
        if self.is_empty:
            raise GeometryError("empty region has no centroid")
        c = self.geometry.centroid
        return (float(c.x), float(c.y))

    def vertices(self) -> np.ndarray:
        """All piece vertices stacked into an (n, 2) array."""
        if self.is_empty:
            return np.zeros((0, 2))
        return np.vstack([np.asarray(p.exterior.coords)[:-1] for p in self.pieces])

    def contains(self, x: ArrayLike, y: ArrayLike) -> np.ndarray:
        """Closed membership test (boundary points count as inside)."""
        if self.is_empty:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=bool)
        return shapely.intersects_xy(self.geometry, x, y)

    def components(self, snap_tol: float = config.SNAP_TOL) -> list[Region2]:
        """
        Connected components of the region, in no particular order.

        Polygons whose boundaries come within ``snap_tol`` of each other
        belong to one component.
        """
        if self.is_empty:
            return []
        parts = _polygonal_parts(self.geometry)
        if len(parts) == 1:
            return [Region2.from_geometry(parts[0])]
        tree = shapely.STRtree(parts)
        left, right = tree.query(parts, predicate="dwithin", distance=snap_tol)
        n = len(parts)
        adjacency = coo_matrix((np.ones(len(left)), (left, right)), shape=(n, n))
        n_groups, labels = connected_components(adjacency, directed=False)
        groups: list[Region2] = []
        for g in range(n_groups):
            members = [parts[i] for i in np.flatnonzero(labels == g)]
            groups.append(Region2.from_geometry(shapely.union_all(members)))
        return [r for r in groups if not r.is_empty]

    def sample_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` points uniformly from the region by rejection in its bounding box."""
        if self.is_empty:
            raise GeometryError("cannot sample an empty region")
        minx, miny, maxx, maxy = self.bounds
        fill = self.area / max((maxx - minx) * (maxy - miny), 1e-300)
        out: list[np.ndarray] = []
        have = 0
        while have < n:
            batch = int(min(max((n - have) / max(fill, 1e-3) * 1.2, 64), 1_000_000))
            xs = rng.uniform(minx, maxx, batch)
            ys = rng.uniform(miny, maxy, batch)
            keep = self.contains(xs, ys)
            pts = np.column_stack([xs[keep], ys[keep]])
            out.append(pts)
            have += len(pts)
        return np.vstack(out)[:n]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def region_boolean(a: Region2, b: Region2, op: BooleanOp) -> Region2:
    """
    Intersection, difference (a minus b) or union of two regions.

    Zero-area results come back as the explicit empty region.
    """
    if op not in _OVERLAYS:
        raise ValueError(f"Unknown boolean op '{op}'. Choose from: {list(_OVERLAYS)}")
    result = _OVERLAYS[op](a.geometry, b.geometry)
    return Region2.from_geometry(result)


def union_all(regions: Iterable[Region2]) -> Region2:
    geoms = [r.geometry for r in regions if not r.is_empty]
    if not geoms:
        return Region2.empty()
    return Region2.from_geometry(shapely.union_all(geoms))


def linear_extremes(
    region: Region2,
    a_x: float,
    a_y: float,
    c: float,
) -> tuple[float, float]:
    """
    Minimum and maximum of a_x·x + a_y·y + c over a region.

    A linear functional over a polygon attains its extremes at vertices,
    so only piece vertices are evaluated.
    """
    if region.is_empty:
        raise GeometryError("empty mode")
    v = region.vertices()
    values = a_x * v[:, 0] + a_y * v[:, 1] + c
    return float(values.min()), float(values.max())


def convex_hull(points: Sequence[Sequence[float]] | np.ndarray) -> Polygon | None:
    """Convex hull of 2D points, or None when the points span no area."""
    hull = shapely.MultiPoint(np.asarray(points, dtype=float)).convex_hull
    if not isinstance(hull, Polygon) or hull.area <= config.DEGENERATE_AREA:
        return None
    return orient(hull, sign=1.0)
