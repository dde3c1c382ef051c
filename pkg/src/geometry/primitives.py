"""
3D geometric primitives in the local ENU frame.

Points are float64 numpy arrays of shape (3,). Planes and convex face
polygons are immutable dataclasses; ``FaceSet`` stacks many faces into
padded arrays so segment/face intersection runs vectorised over every
face (and many segments) at once.

All predicates use absolute tolerances from ``config``; the area of
interest spans at most a few hundred metres.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

import config
from src.errors import GeometryError

Vec3 = NDArray[np.float64]

# Segments are tested in chunks to bound the (segments × faces × vertices) tensor.
_CHUNK = 2048


def as_vec3(p: ArrayLike) -> Vec3:
    """Coerce to a finite float64 vector of shape (3,)."""
    v = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise GeometryError(f"non-finite coordinates: {v}")
    return v


# ---------------------------------------------------------------------------
# Plane
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Plane3:
    """Oriented plane through ``point`` with unit normal ``unit_normal``."""

    point: Vec3
    unit_normal: Vec3

    def __post_init__(self) -> None:
        object.__setattr__(self, "point", as_vec3(self.point))
        n = as_vec3(self.unit_normal)
        if abs(np.linalg.norm(n) - 1.0) > config.UNIT_NORMAL_TOL:
            raise GeometryError(f"plane normal is not unit length: |n|={np.linalg.norm(n)}")
        object.__setattr__(self, "unit_normal", n)

    @classmethod
    def from_normal(cls, point: ArrayLike, normal: ArrayLike) -> Plane3:
        n = as_vec3(normal)
        length = float(np.linalg.norm(n))
        if length == 0.0:
            raise GeometryError("plane normal has zero length")
        return cls(as_vec3(point), n / length)

    def signed_distance(self, p: ArrayLike) -> float:
        return float(np.dot(as_vec3(p) - self.point, self.unit_normal))


def mirror_point(p: ArrayLike, plane: Plane3) -> Vec3:
    """Reflect ``p`` across ``plane``: p − 2((p − q)·n)n."""
    v = as_vec3(p)
    n = plane.unit_normal
    return v - 2.0 * float(np.dot(v - plane.point, n)) * n


# ---------------------------------------------------------------------------
# Convex planar polygon
# ---------------------------------------------------------------------------


def _newell_normal(vertices: np.ndarray) -> np.ndarray:
    nxt = np.roll(vertices, -1, axis=0)
    return np.array(
        [
            np.sum((vertices[:, 1] - nxt[:, 1]) * (vertices[:, 2] + nxt[:, 2])),
            np.sum((vertices[:, 2] - nxt[:, 2]) * (vertices[:, 0] + nxt[:, 0])),
            np.sum((vertices[:, 0] - nxt[:, 0]) * (vertices[:, 1] + nxt[:, 1])),
        ]
    )


@dataclass(frozen=True, eq=False)
class Polygon3:
    """
    Convex planar polygon in 3D.

    Vertices are ordered counter-clockwise when seen from the side the
    normal points to, so the Newell normal of the vertex loop *is* the
    outward normal of a building face.
    """

    vertices: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 3:
            raise GeometryError(f"polygon needs >= 3 vertices of shape (k, 3), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise GeometryError("polygon has non-finite vertices")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

        newell = _newell_normal(v)
        twice_area = float(np.linalg.norm(newell))
        if twice_area <= 2.0 * config.DEGENERATE_AREA:
            raise GeometryError("polygon is degenerate (zero area)")
        n = newell / twice_area
        residual = np.abs((v - v.mean(axis=0)) @ n).max()
        if residual > config.GEOM_TOL:
            raise GeometryError(f"polygon is not planar (residual {residual:.3e} m)")

        edges = np.roll(v, -1, axis=0) - v
        following = np.roll(edges, -1, axis=0)
        turns = np.cross(edges, following) @ n
        if np.any(turns < -config.GEOM_TOL):
            raise GeometryError("polygon must be convex with counter-clockwise vertices")
        # a star polygon turns the same way at every vertex but winds twice
        winding = np.arctan2(turns, np.einsum("ij,ij->i", edges, following)).sum()
        if abs(winding - 2.0 * np.pi) > 1e-6:
            raise GeometryError("polygon is self-intersecting")

    @cached_property
    def normal(self) -> Vec3:
        newell = _newell_normal(self.vertices)
        return newell / np.linalg.norm(newell)

    @cached_property
    def centroid(self) -> Vec3:
        return self.vertices.mean(axis=0)

    @cached_property
    def area(self) -> float:
        return 0.5 * float(np.linalg.norm(_newell_normal(self.vertices)))

    @cached_property
    def plane(self) -> Plane3:
        return Plane3(self.centroid, self.normal)


def segment_hits_polygon(
    a: ArrayLike,
    b: ArrayLike,
    poly: Polygon3,
    tol: float = config.GEOM_TOL,
) -> Vec3 | None:
    """
    Intersect the open segment (a, b) with a convex polygon.

    Returns the crossing point when it lies inside the polygon (edges
    included within ``tol``) and at least ``tol`` away from both
    endpoints; otherwise ``None``. A segment parallel to the polygon's
    plane, coplanar or not, never hits.
    """
    a1, b1 = as_vec3(a), as_vec3(b)
    d = b1 - a1
    length = float(np.linalg.norm(d))
    if length == 0.0:
        raise GeometryError("segment endpoints coincide")
    n = poly.normal
    denom = float(np.dot(n, d))
    if abs(denom) <= 1e-12 * max(length, 1.0):
        return None
    t = float(np.dot(n, poly.vertices[0] - a1)) / denom
    if t * length <= tol or (1.0 - t) * length <= tol:
        return None
    p = a1 + t * d
    v = poly.vertices
    edges = np.roll(v, -1, axis=0) - v
    edge_len = np.linalg.norm(edges, axis=1)
    side = np.cross(edges, p - v) @ n
    if np.all((edge_len <= 0.0) | (side >= -tol * edge_len)):
        return p
    return None


# ---------------------------------------------------------------------------
# Vectorised face collection
# ---------------------------------------------------------------------------


class FaceSet:
    """
    Many convex faces stacked into padded arrays.

    Polygons with fewer vertices than the largest one are padded by
    repeating their last vertex; the resulting zero-length edges are
    ignored by the inside test.

    Parameters
    ----------
    polygons : sequence of Polygon3
        Faces to stack.
    ids : sequence of str or None
        Face identifiers; defaults to the string form of each index.
    """

    def __init__(
        self,
        polygons: Sequence[Polygon3],
        ids: Sequence[str] | None = None,
    ) -> None:
        self.polygons = tuple(polygons)
        if ids is None:
            ids = [str(i) for i in range(len(self.polygons))]
        if len(ids) != len(self.polygons):
            raise ValueError("ids and polygons differ in length")
        self.ids = tuple(ids)
        self._index = {fid: i for i, fid in enumerate(self.ids)}
        if len(self._index) != len(self.ids):
            raise ValueError("face ids must be unique")

        n_faces = len(self.polygons)
        n_vert = max((len(p.vertices) for p in self.polygons), default=3)
        verts = np.zeros((n_faces, n_vert, 3))
        nxt = np.zeros((n_faces, n_vert, 3))
        for i, poly in enumerate(self.polygons):
            k = len(poly.vertices)
            verts[i, :k] = poly.vertices
            nxt[i, : k - 1] = poly.vertices[1:]
            nxt[i, k - 1] = poly.vertices[0]
            # padded slots are zero-length edges v_last -> v_last
            verts[i, k:] = poly.vertices[-1]
            nxt[i, k:] = poly.vertices[-1]
        self._verts = verts
        self._edges = nxt - verts
        self._edge_len = np.linalg.norm(self._edges, axis=2)
        self._normals = np.array([p.normal for p in self.polygons]).reshape(n_faces, 3)
        self._offsets = np.einsum("fk,fk->f", self._normals, verts[:, 0, :])

    @classmethod
    def from_polygons(cls, polygons: Sequence[Polygon3]) -> FaceSet:
        return cls(polygons)

    def __len__(self) -> int:
        return len(self.polygons)

    def index_of(self, face_ids: Iterable[str | int]) -> list[int]:
        """Translate face ids (or raw integer indices) to array indices."""
        out: list[int] = []
        for fid in face_ids:
            if isinstance(fid, (int, np.integer)) and not isinstance(fid, bool):
                out.append(int(fid))
            else:
                out.append(self._index[fid])
        return out

    def _hit_params(
        self,
        a: np.ndarray,
        b: np.ndarray,
        tol: float,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Return (hit mask (N, F), crossing parameter t (N, F)) for one chunk."""
        d = b - a
        length = np.linalg.norm(d, axis=1)
        denom = d @ self._normals.T
        num = self._offsets[None, :] - a @ self._normals.T
        parallel = np.abs(denom) <= 1e-12 * np.maximum(length[:, None], 1.0)
        t = np.divide(num, denom, out=np.full_like(num, np.nan), where=~parallel)
        ok = ~parallel & (t * length[:, None] > tol) & ((1.0 - t) * length[:, None] > tol)
        t_safe = np.where(ok, t, 0.0)

        points = a[:, None, :] + t_safe[..., None] * d[:, None, :]  # (N, F, 3)
        rel = points[:, :, None, :] - self._verts[None, :, :, :]  # (N, F, V, 3)
        cross = np.cross(np.broadcast_to(self._edges[None], rel.shape), rel)
        side = np.einsum("nfvk,fk->nfv", cross, self._normals)
        degenerate = self._edge_len <= 0.0
        edge_len = np.where(degenerate, 1.0, self._edge_len)
        inside = np.all((side / edge_len[None] >= -tol) | degenerate[None], axis=2)
        return ok & inside, t_safe

    def hits(
        self,
        a: ArrayLike,
        b: ArrayLike,
        tol: float = config.GEOM_TOL,
    ) -> np.ndarray:
        """
        Boolean matrix (N segments × F faces) of open-segment crossings.

        ``a`` and ``b`` are (3,) or (N, 3) arrays and broadcast against
        each other.
        """
        a2, b2 = np.broadcast_arrays(np.atleast_2d(np.asarray(a, float)), np.atleast_2d(np.asarray(b, float)))
        n_seg = a2.shape[0]
        out = np.zeros((n_seg, len(self)), dtype=bool)
        if len(self) == 0 or n_seg == 0:
            return out
        if np.any(np.linalg.norm(b2 - a2, axis=1) == 0.0):
            raise GeometryError("segment endpoints coincide")
        for start in range(0, n_seg, _CHUNK):
            stop = start + _CHUNK
            mask, _ = self._hit_params(a2[start:stop], b2[start:stop], tol)
            out[start:stop] = mask
        return out

    def crossings(
        self,
        a: ArrayLike,
        b: ArrayLike,
        tol: float = config.GEOM_TOL,
    ) -> np.ndarray | None:
        """
        Crossing points of the single segment (a, b) with every face.

        Returns an (F, 3) array with NaN rows for faces that are not hit,
        or ``None`` when no face is hit.
        """
        a1, b1 = as_vec3(a), as_vec3(b)
        if np.array_equal(a1, b1):
            raise GeometryError("segment endpoints coincide")
        if len(self) == 0:
            return None
        mask, t = self._hit_params(a1[None], b1[None], tol)
        if not mask.any():
            return None
        pts = a1[None, :] + t[0, :, None] * (b1 - a1)[None, :]
        pts[~mask[0]] = np.nan
        return pts

    def occluded(
        self,
        a: ArrayLike,
        b: ArrayLike,
        exclude: Iterable[str | int] = (),
        tol: float = config.GEOM_TOL,
    ) -> np.ndarray:
        """Per-segment flag: does any non-excluded face cross the segment?"""
        mask = self.hits(a, b, tol=tol)
        skip = self.index_of(exclude)
        if skip:
            mask[:, skip] = False
        return mask.any(axis=1)


def segment_occluded(
    a: ArrayLike,
    b: ArrayLike,
    faces: FaceSet | Sequence[Polygon3],
    exclude: Iterable[str | int] = (),
    tol: float = config.GEOM_TOL,
) -> bool:
    """
    True iff a non-excluded face crosses the open segment (a, b).

    Grazing contacts with an edge or vertex count as crossings, so the
    test errs on the side of declaring a segment blocked.
    """
    if not isinstance(faces, FaceSet):
        faces = FaceSet.from_polygons(list(faces))
    return bool(faces.occluded(a, b, exclude=exclude, tol=tol)[0])
