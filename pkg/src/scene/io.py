"""
JSON ingestion and export of scenes and epochs.

Scene file::

    {"ground_z": 0.0, "receiver_height": 0.0,
     "aoi": [[x, y], ...],
     "buildings": [{"id": "b0", "footprint": [[x, y], ...],
                    "base_z": 0.0, "top_z": 30.0}, ...]}

Epoch file::

    {"observations": [{"sat_id": "G01", "pos": [x, y, z], "pseudorange": r}, ...],
     "truth": {"pos": [x, y, z], "clock_bias": b},          # optional
     "visibility": {"G01": "LOS", ...},                     # optional
     "labels": {...}}                                       # optional, simulator truth

Every object is validated on load; violations raise ``SchemaError`` naming
the offending field and the rule it breaks. Writes are atomic.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from src.errors import GeometryError, SchemaError
from src.geometry.regions import Region2
from src.scene.model import (
    Building,
    Epoch,
    SatelliteObservation,
    Scene,
    Truth,
    Visibility,
    VisibilityVector,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# File helpers
# ---------------------------------------------------------------------------


def write_text_atomic(path: str | Path, text: str) -> Path:
    """Write text via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def write_json_atomic(path: str | Path, obj: Any) -> Path:
    return write_text_atomic(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def read_json(path: str | Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No such file: '{path}'")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(str(path), f"invalid JSON ({exc.msg} at line {exc.lineno})") from exc


# ---------------------------------------------------------------------------
# Field validation
# ---------------------------------------------------------------------------


def _require(obj: Any, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise SchemaError(where, "must be an object")
    if key not in obj:
        raise SchemaError(f"{where}.{key}" if where else key, "is required")
    return obj[key]


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(name, "must be a number")
    if not np.isfinite(value):
        raise SchemaError(name, "must be finite")
    return float(value)


def _point(value: Any, name: str, dim: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != dim:
        raise SchemaError(name, f"must be a list of {dim} numbers")
    return np.array([_number(v, f"{name}[{i}]") for i, v in enumerate(value)])


def _ring(value: Any, name: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) < 3:
        raise SchemaError(name, "must be a list of at least 3 [x, y] points")
    return np.array([_point(p, f"{name}[{i}]", 2) for i, p in enumerate(value)])


def _ring_to_list(xy: np.ndarray) -> list[list[float]]:
    return [[float(x), float(y)] for x, y in xy]


# ---------------------------------------------------------------------------
# Scene
# ---------------------------------------------------------------------------


def scene_from_dict(data: dict[str, Any]) -> Scene:
    ground_z = _number(data.get("ground_z", 0.0), "ground_z")
    receiver_height = _number(data.get("receiver_height", 0.0), "receiver_height")
    try:
        aoi = Region2.from_polygon(_ring(_require(data, "aoi", ""), "aoi"))
    except GeometryError as exc:
        raise SchemaError("aoi", str(exc)) from exc

    raw_buildings = data.get("buildings", [])
    if not isinstance(raw_buildings, list):
        raise SchemaError("buildings", "must be a list")
    buildings: list[Building] = []
    for i, raw in enumerate(raw_buildings):
        where = f"buildings[{i}]"
        bid = _require(raw, "id", where)
        if not isinstance(bid, (str, int)) or isinstance(bid, bool):
            raise SchemaError(f"{where}.id", "must be a string")
        footprint = _ring(_require(raw, "footprint", where), f"{where}.footprint")
        base_z = _number(raw.get("base_z", ground_z), f"{where}.base_z")
        top_z = _number(_require(raw, "top_z", where), f"{where}.top_z")
        try:
            buildings.append(Building(str(bid), footprint, base_z, top_z))
        except GeometryError as exc:
            raise SchemaError(f"{where}.footprint", str(exc)) from exc
    try:
        return Scene(tuple(buildings), aoi, ground_z=ground_z, receiver_height=receiver_height)
    except GeometryError as exc:
        raise SchemaError("buildings", str(exc)) from exc


def scene_to_dict(scene: Scene) -> dict[str, Any]:
    if len(scene.aoi.pieces) != 1:
        raise SchemaError("aoi", "only single-polygon areas of interest can be saved")
    aoi_xy = np.asarray(scene.aoi.pieces[0].exterior.coords)[:-1]
    return {
        "ground_z": scene.ground_z,
        "receiver_height": scene.receiver_height,
        "aoi": _ring_to_list(aoi_xy),
        "buildings": [
            {
                "id": b.id,
                "footprint": _ring_to_list(b.footprint_xy()),
                "base_z": b.base_z,
                "top_z": b.top_z,
            }
            for b in scene.buildings
        ],
    }


def load_scene(path: str | Path) -> Scene:
    """
    Load and validate a scene file.

    Parameters
    ----------
    path : str or Path
        JSON scene file.

    Returns
    -------
    Scene
    """
    data = read_json(path)
    if not isinstance(data, dict):
        raise SchemaError("scene", "must be a JSON object")
    scene = scene_from_dict(data)
    logger.info("Loaded scene %s: %d buildings", path, len(scene.buildings))
    return scene


def save_scene(scene: Scene, path: str | Path) -> Path:
    return write_json_atomic(path, scene_to_dict(scene))


# ---------------------------------------------------------------------------
# Epoch
# ---------------------------------------------------------------------------


def epoch_from_dict(data: dict[str, Any]) -> Epoch:
    raw_obs = _require(data, "observations", "")
    if not isinstance(raw_obs, list) or not raw_obs:
        raise SchemaError("observations", "must be a non-empty list")
    observations: list[SatelliteObservation] = []
    seen: set[str] = set()
    for i, raw in enumerate(raw_obs):
        where = f"observations[{i}]"
        sat_id = str(_require(raw, "sat_id", where))
        if sat_id in seen:
            raise SchemaError(f"{where}.sat_id", f"duplicate sat_id '{sat_id}'")
        seen.add(sat_id)
        pos = _point(_require(raw, "pos", where), f"{where}.pos", 3)
        rho = _number(_require(raw, "pseudorange", where), f"{where}.pseudorange")
        try:
            observations.append(SatelliteObservation(sat_id, pos, rho))
        except SchemaError as exc:
            raise SchemaError(f"{where}.{exc.field}", exc.rule) from exc

    truth = None
    if data.get("truth") is not None:
        raw_truth = data["truth"]
        truth = Truth(
            _point(_require(raw_truth, "pos", "truth"), "truth.pos", 3),
            _number(_require(raw_truth, "clock_bias", "truth"), "truth.clock_bias"),
        )
    return Epoch(tuple(observations), truth)


def epoch_to_dict(
    epoch: Epoch,
    visibility: VisibilityVector | None = None,
    labels: dict[str, Any] | None = None,
) -> dict[str, Any]:
    out: dict[str, Any] = {
        "observations": [
            {
                "sat_id": o.sat_id,
                "pos": [float(v) for v in o.position],
                "pseudorange": o.pseudorange,
            }
            for o in epoch.observations
        ]
    }
    if epoch.truth is not None:
        out["truth"] = {
            "pos": [float(v) for v in epoch.truth.position],
            "clock_bias": epoch.truth.clock_bias,
        }
    if visibility is not None:
        out["visibility"] = {sid: Visibility(v).value for sid, v in visibility.items()}
    if labels is not None:
        out["labels"] = labels
    return out


def visibility_from_dict(raw: Any, where: str = "visibility") -> VisibilityVector:
    if not isinstance(raw, dict):
        raise SchemaError(where, "must be an object mapping sat_id to LOS/NLOS")
    vis: VisibilityVector = {}
    for sid, value in raw.items():
        try:
            vis[str(sid)] = Visibility(value)
        except ValueError as exc:
            raise SchemaError(f"{where}.{sid}", "must be 'LOS' or 'NLOS'") from exc
    return vis


def load_epoch(path: str | Path) -> Epoch:
    data = read_json(path)
    if not isinstance(data, dict):
        raise SchemaError("epoch", "must be a JSON object")
    return epoch_from_dict(data)


def load_visibility(path: str | Path) -> VisibilityVector | None:
    """Visibility map stored in an epoch file, or None when absent."""
    data = read_json(path)
    if not isinstance(data, dict) or data.get("visibility") is None:
        return None
    return visibility_from_dict(data["visibility"])


def load_labels(path: str | Path) -> dict[str, Any] | None:
    data = read_json(path)
    if not isinstance(data, dict):
        return None
    return data.get("labels")


def save_epoch(
    epoch: Epoch,
    path: str | Path,
    visibility: VisibilityVector | None = None,
    labels: dict[str, Any] | None = None,
) -> Path:
    return write_json_atomic(path, epoch_to_dict(epoch, visibility, labels))
