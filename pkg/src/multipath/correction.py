"""
Per-mode multipath-error estimation and pseudorange correction.

Assuming the receiver sits at a mode's centroid, each satellite that the
centroid cannot see directly is given the excess delay of its shortest
single-reflection path:

    delay = shortest reflected path length − direct distance
    corrected ρ = ρ − delay

LOS satellites and NLOS satellites without any reflection path keep their
pseudorange. Rebuilding the SPC planes from the corrected pseudoranges and
projecting every mode through them gives the enhanced mixture model of
that assumed mode.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

import config
from src.multipath.reflection import find_paths, shortest_path
from src.scene.io import write_text_atomic
from src.scene.model import Epoch, Scene
from src.shadow.matching import Mode, ModeSet
from src.spc.mixture import MixtureModel, build_spc_mixture

logger = logging.getLogger(__name__)


class CorrectionStatus(str, Enum):
    LOS = "LOS"
    CORRECTED = "corrected"
    NO_PATH = "no_path"


@dataclass(frozen=True)
class MultipathEstimate:
    """
    Multipath estimate for one satellite under one assumed receiver position.

    ``delay`` is set only when ``status`` is CORRECTED.
    """

    sat_id: str
    status: CorrectionStatus
    pseudorange: float
    corrected_pseudorange: float
    delay: float | None = None
    n_paths: int = 0
    face_id: str | None = None


def estimate_corrections(
    scene: Scene,
    mode: Mode,
    epoch: Epoch,
) -> list[MultipathEstimate]:
    """
    Multipath corrections for every satellite, assuming the receiver at ``mode``'s centroid.

    Parameters
    ----------
    scene : Scene
        City model.
    mode : Mode
        Assumed mode; its centroid is the candidate receiver position.
    epoch : Epoch
        Observations to correct.

    Returns
    -------
    list of MultipathEstimate
        One per observation, in epoch order.
    """
    candidate = scene.lift(*mode.centroid)
    sats = np.array([o.position for o in epoch.observations])
    blocked = scene.face_set.occluded(candidate, sats)

    estimates: list[MultipathEstimate] = []
    for obs, is_nlos in zip(epoch.observations, blocked):
        rho = obs.pseudorange
        if not is_nlos:
            estimates.append(MultipathEstimate(obs.sat_id, CorrectionStatus.LOS, rho, rho))
            continue
        paths = find_paths(scene, candidate, obs)
        best = shortest_path(paths)
        if best is None:
            logger.debug("mode %d: %s NLOS with no reflection path", mode.id, obs.sat_id)
            estimates.append(MultipathEstimate(obs.sat_id, CorrectionStatus.NO_PATH, rho, rho))
            continue
        delay = best.length - float(np.linalg.norm(obs.position - candidate))
        estimates.append(
            MultipathEstimate(
                obs.sat_id,
                CorrectionStatus.CORRECTED,
                rho,
                rho - delay,
                delay=delay,
                n_paths=len(paths),
                face_id=best.face_id,
            )
        )
        logger.debug(
            "mode %d: %s corrected by %.3f m via %s", mode.id, obs.sat_id, delay, best.face_id
        )
    return estimates


def build_enhanced_mixture(
    scene: Scene,
    mode_set: ModeSet,
    epoch: Epoch,
    assumed_mode: Mode,
    estimates: Sequence[MultipathEstimate] | None = None,
    half_width: float = config.MIUD_HALF_WIDTH,
) -> MixtureModel:
    """
    Mixture model built from pseudoranges corrected for ``assumed_mode``.

    Parameters
    ----------
    scene : Scene
        City model (provides the linearisation anchor).
    mode_set : ModeSet
        All modes; every one is projected through the corrected planes.
    epoch : Epoch
        Uncorrected observations.
    assumed_mode : Mode
        Mode the receiver is assumed to be in.
    estimates : sequence of MultipathEstimate or None
        Precomputed corrections for ``assumed_mode``; computed when None.
    half_width : float
        MIUD zero-width inflation.

    Returns
    -------
    MixtureModel
    """
    if assumed_mode.id >= len(mode_set) or mode_set[assumed_mode.id] is not assumed_mode:
        raise ValueError(f"mode {assumed_mode.id} is not part of the mode set")
    if estimates is None:
        estimates = estimate_corrections(scene, assumed_mode, epoch)
    corrected = epoch.with_pseudoranges({e.sat_id: e.corrected_pseudorange for e in estimates})
    return build_spc_mixture(corrected, mode_set, scene.anchor, half_width)


def write_multipath_debug_csv(
    estimates_by_mode: dict[int, Sequence[MultipathEstimate]],
    path: str | Path,
) -> Path:
    """Dump corrections: sat_id, mode_id, status, delay_m, n_paths."""
    rows = [
        {
            "sat_id": e.sat_id,
            "mode_id": mode_id,
            "status": e.status.value,
            "delay_m": e.delay,
            "n_paths": e.n_paths,
        }
        for mode_id, estimates in sorted(estimates_by_mode.items())
        for e in estimates
    ]
    df = pd.DataFrame(rows, columns=["sat_id", "mode_id", "status", "delay_m", "n_paths"])
    return write_text_atomic(path, df.to_csv(index=False, float_format="%.17g"))
