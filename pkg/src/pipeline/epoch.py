"""
Single-epoch ambiguity-reduction pipeline.

Flow: visibility → shadow-matching modes → baseline SPC mixture and
posterior → one multipath-corrected mixture and posterior per assumed mode
→ consistency matrix → case-based selection.

Random stream discipline: the epoch stream's sub-stream 0 feeds the
baseline model and sub-stream i + 1 feeds enhanced model i.
"""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import config
from src.errors import EpochError
from src.inference.rng import RandomStream
from src.scene.model import Epoch, Scene, Visibility
from src.selector.selection import (
    ConsistencyMatrix,
    SelectionResult,
    consistency_matrix,
    select_baseline,
    select_enhanced,
)
from src.shadow.matching import ModeSet, modes_from_visibility

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Configuration and result containers
# ---------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    """Per-epoch pipeline parameters."""

    k: int = config.NUM_SAMPLES
    min_mode_area: float = config.MIN_MODE_AREA

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.min_mode_area < 0:
            raise ValueError(f"min_mode_area must be >= 0, got {self.min_mode_area}")


@dataclass
class EpochOutcome:
    """Everything one epoch produced, plus per-stage wall-clock seconds."""

    mode_set: ModeSet
    matrix: ConsistencyMatrix
    baseline: SelectionResult
    enhanced: SelectionResult
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def n_modes(self) -> int:
        return len(self.mode_set)

    @property
    def total_time(self) -> float:
        return sum(self.timings.values())

    @property
    def methods_agree(self) -> bool:
        return self.baseline.chosen_mode_id == self.enhanced.chosen_mode_id


@contextmanager
def _stage(name: str, timings: dict[str, float]) -> Iterator[None]:
    """Time a stage and wrap any failure in an EpochError naming it."""
    start = time.perf_counter()
    try:
        yield
    except EpochError:
        raise
    except Exception as exc:
        raise EpochError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - start


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


def run_epoch(
    scene: Scene,
    epoch: Epoch,
    visibility: Mapping[str, Visibility | str] | None,
    rng: RandomStream,
    cfg: PipelineConfig | None = None,
    mode_set: ModeSet | None = None,
) -> EpochOutcome:
    """
    Run both selection methods on one epoch.

    Parameters
    ----------
    scene : Scene
        City model.
    epoch : Epoch
        Observations; reordered by sat_id internally.
    visibility : mapping sat_id → LOS/NLOS or None
        Observed signal classes; may be None only when ``mode_set`` is given.
    rng : RandomStream
        Epoch stream; only its sub-streams are consumed.
    cfg : PipelineConfig or None
        Sample budget and sliver threshold.
    mode_set : ModeSet or None
        Precomputed modes; bypasses shadow matching.

    Returns
    -------
    EpochOutcome
    """
    cfg = cfg or PipelineConfig()
    timings: dict[str, float] = {}
    epoch = epoch.sorted()

    with _stage("inputs", timings):
        if mode_set is None:
            if visibility is None:
                raise ValueError("visibility is required when no mode set is supplied")
            if set(visibility) != set(epoch.sat_ids):
                raise ValueError(
                    f"visibility sat_ids {sorted(visibility)} do not match epoch {epoch.sat_ids}"
                )

    with _stage("shadow", timings):
        if mode_set is None:
            mode_set = modes_from_visibility(
                scene, visibility, epoch.positions, min_mode_area=cfg.min_mode_area
            )

    with _stage("baseline", timings):
        baseline = select_baseline(epoch, mode_set, rng.spawn(0), scene.anchor, cfg.k)

    with _stage("enhanced", timings):
        matrix = consistency_matrix(scene, epoch, mode_set, rng, cfg.k)

    with _stage("selection", timings):
        enhanced = select_enhanced(matrix)

    logger.debug(
        "epoch: M=%d baseline=%d enhanced=%d (case %s) in %.3fs",
        len(mode_set),
        baseline.chosen_mode_id,
        enhanced.chosen_mode_id,
        enhanced.case_type,
        sum(timings.values()),
    )
    return EpochOutcome(mode_set, matrix, baseline, enhanced, timings)
