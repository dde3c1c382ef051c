"""
Single-reflection propagation paths by the image method.

For each wall that faces the satellite, the satellite is mirrored across
the wall's plane. The straight segment from the mirrored satellite to the
receiver crosses the wall at the specular reflection point when such a
path exists; its length equals the length of the reflected path. A path is
kept only when neither leg is blocked by any other face.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from src.geometry.primitives import Vec3, as_vec3, mirror_point, segment_hits_polygon
from src.scene.model import SatelliteObservation, Scene

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PropagationPath:
    """
    One specular single-bounce path from satellite to receiver.

    Attributes
    ----------
    sat_id : str
        Transmitting satellite.
    face_id : str
        Reflecting wall.
    reflection_point : Vec3
        Bounce point on the wall.
    length : float
        Total path length |receiver → bounce| + |bounce → satellite| (m).
    mirrored_sat : Vec3
        Satellite image across the wall plane.
    """

    sat_id: str
    face_id: str
    reflection_point: Vec3
    length: float
    mirrored_sat: Vec3


def reflection_candidate_faces(scene: Scene, sat: ArrayLike) -> list[str]:
    """Walls illuminated by the satellite: n · unit(sat − face centroid) > 0."""
    s = as_vec3(sat)
    out: list[str] = []
    for face in scene.faces:
        if face.is_top:
            continue
        to_sat = s - face.polygon.centroid
        if float(np.dot(face.normal, to_sat)) / float(np.linalg.norm(to_sat)) > 0.0:
            out.append(face.face_id)
    return out


def find_paths(
    scene: Scene,
    candidate: ArrayLike,
    obs: SatelliteObservation,
) -> list[PropagationPath]:
    """
    All unobstructed single-reflection paths from ``obs``'s satellite to ``candidate``.

    Parameters
    ----------
    scene : Scene
        City model.
    candidate : array-like (3,)
        Receiver position on the receiver plane.
    obs : SatelliteObservation
        Satellite whose signal is reflected.

    Returns
    -------
    list of PropagationPath
        In face order; empty when no reflection survives.
    """
    c = as_vec3(candidate)
    s = obs.position
    face_set = scene.face_set
    paths: list[PropagationPath] = []
    for face_id in reflection_candidate_faces(scene, s):
        face = scene.faces_by_id[face_id]
        image = mirror_point(s, face.plane)
        bounce = segment_hits_polygon(image, c, face.polygon)
        if bounce is None:
            continue
        legs_blocked = face_set.occluded(
            np.vstack([c, bounce]),
            np.vstack([bounce, s]),
            exclude=[face_id],
        )
        if legs_blocked.any():
            continue
        paths.append(
            PropagationPath(obs.sat_id, face_id, bounce, float(np.linalg.norm(c - image)), image)
        )
    logger.debug("%s: %d reflection paths", obs.sat_id, len(paths))
    return paths


def shortest_path(paths: list[PropagationPath]) -> PropagationPath | None:
    """Shortest path (first arrival); ties go to the lowest face id."""
    if not paths:
        return None
    return min(paths, key=lambda p: (p.length, p.face_id))
