"""
Monte Carlo batch evaluation.

One scene is generated per batch (a fixed test route); every epoch draws
its own receiver position and constellation from the per-epoch stream
``root.spawn(epoch_idx + 1)``, so results do not depend on how epochs are
scheduled across worker processes.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd

import config
from src.errors import EpochError, GeometryError, SimulationError
from src.evaluation.metrics import (
    RECORD_COLUMNS,
    EvaluationReport,
    compute_evaluation_report,
)
from src.inference.rng import RandomStream
from src.pipeline.epoch import PipelineConfig, run_epoch
from src.scene.model import Scene
from src.shadow.matching import ModeSet
from src.sim.scenario import LabeledEpoch, SimConfig, draw_truth, generate_scene, synthesize_epoch

logger = logging.getLogger(__name__)


@dataclass
class BatchReport:
    """
    Output of a Monte Carlo batch.

    Attributes
    ----------
    records : pd.DataFrame
        One row per successful epoch (see ``RECORD_COLUMNS``).
    failures : list of dict
        ``{epoch_idx, stage, error, message}`` per failed epoch.
    n_requested : int
        Epochs requested.
    seed : int
        Root seed of the batch.
    """

    records: pd.DataFrame
    failures: list[dict[str, Any]] = field(default_factory=list)
    n_requested: int = 0
    seed: int = config.SIM_SEED

    @property
    def n_successful(self) -> int:
        return len(self.records)

    @property
    def n_failed(self) -> int:
        return len(self.failures)

    @property
    def evaluation(self) -> EvaluationReport:
        return compute_evaluation_report(self.records)

    @property
    def accuracy_baseline(self) -> float:
        return self.evaluation.accuracy_baseline

    @property
    def accuracy_enhanced(self) -> float:
        return self.evaluation.accuracy_enhanced

    @property
    def case_counts(self) -> dict[str, int]:
        return self.evaluation.case_counts

    def to_dict(self) -> dict[str, Any]:
        ev = self.evaluation
        return {
            "seed": self.seed,
            "n_requested": self.n_requested,
            "n_successful": self.n_successful,
            "n_failed": self.n_failed,
            "accuracy": {"baseline_spc": ev.accuracy_baseline, "enhanced_spc": ev.accuracy_enhanced},
            "rms_error_m": {
                "ideal": ev.rms_ideal,
                "baseline_spc": ev.rms_baseline,
                "enhanced_spc": ev.rms_enhanced,
            },
            "case_counts": ev.case_counts,
            "failures": self.failures,
        }

    def __str__(self) -> str:
        header = [
            f"  Epochs requested:          {self.n_requested:>8}",
            f"  Epochs failed:             {self.n_failed:>8}",
        ]
        cases = "  Cases (1/2/3):             " + " / ".join(
            str(self.case_counts[c]) for c in ("1", "2", "3")
        )
        return "\n".join(header + [str(self.evaluation), cases])


# ---------------------------------------------------------------------------
# One epoch
# ---------------------------------------------------------------------------


def _centroid_error(labeled: LabeledEpoch, mode_set: ModeSet, mode_id: int | None) -> float:
    if mode_id is None:
        return float("nan")
    truth = labeled.epoch.truth.position[:2]
    return float(np.hypot(*(np.asarray(mode_set[mode_id].centroid) - truth)))


def _draw_source(stream: RandomStream, attempt: int) -> RandomStream:
    """Attempt 0 uses the epoch stream itself; redraws use ``stream.spawn(3).spawn(attempt)``."""
    return stream if attempt == 0 else stream.spawn(3).spawn(attempt)


def simulate_epoch(
    scene: Scene,
    cfg: SimConfig,
    epoch_idx: int,
    max_redraws: int = config.MAX_EPOCH_REDRAWS,
) -> LabeledEpoch:
    """
    Receiver position and observations of one epoch from its own stream.

    When too few satellites are tracked from the drawn position, the
    receiver and constellation are redrawn from a sub-stream of the same
    epoch, at most ``max_redraws`` times. Sub-streams 0-2 of the epoch
    stream belong to the first draw and the pipeline.
    """
    if max_redraws < 0:
        raise ValueError(f"max_redraws must be >= 0, got {max_redraws}")
    stream = RandomStream(cfg.seed).spawn(epoch_idx + 1)
    for attempt in range(max_redraws + 1):
        source = _draw_source(stream, attempt)
        truth_xy = draw_truth(scene, source.spawn(0).generator())
        try:
            return synthesize_epoch(scene, truth_xy, cfg, source.spawn(1))
        except SimulationError as exc:
            last = exc
            logger.debug("epoch %d draw %d rejected: %s", epoch_idx, attempt, exc)
    raise SimulationError(f"{last} after {max_redraws} redraws")


def run_one_epoch(
    scene: Scene,
    cfg: SimConfig,
    epoch_idx: int,
    k: int = config.NUM_SAMPLES,
) -> dict[str, Any]:
    """
    Simulate and evaluate one epoch.

    Returns a record dict on success, or a failure dict carrying ``stage``.
    """
    try:
        labeled = simulate_epoch(scene, cfg, epoch_idx)
    except (SimulationError, GeometryError) as exc:
        return {"epoch_idx": epoch_idx, "stage": "simulate", "error": type(exc).__name__, "message": str(exc)}
    if labeled.mode_set is None:
        return {
            "epoch_idx": epoch_idx,
            "stage": "shadow",
            "error": "NoFeasibleRegionError",
            "message": "no feasible region",
        }

    stream = RandomStream(cfg.seed).spawn(epoch_idx + 1).spawn(2)
    try:
        outcome = run_epoch(
            scene,
            labeled.epoch,
            labeled.visibility,
            stream,
            PipelineConfig(k=k),
            mode_set=labeled.mode_set,
        )
    except EpochError as exc:
        return {"epoch_idx": epoch_idx, **exc.to_dict()}

    ms = outcome.mode_set
    truth_mode = labeled.truth_mode_id
    return {
        "epoch_idx": epoch_idx,
        "truth_mode": truth_mode,
        "M": len(ms),
        "baseline_choice": outcome.baseline.chosen_mode_id,
        "enhanced_choice": outcome.enhanced.chosen_mode_id,
        "case": outcome.enhanced.case_type,
        "baseline_err_m": _centroid_error(labeled, ms, outcome.baseline.chosen_mode_id),
        "enhanced_err_m": _centroid_error(labeled, ms, outcome.enhanced.chosen_mode_id),
        "ideal_err_m": _centroid_error(labeled, ms, truth_mode),
    }


def _run_one_packed(args: tuple[Scene, SimConfig, int, int]) -> dict[str, Any]:
    return run_one_epoch(*args)


# ---------------------------------------------------------------------------
# Batch
# ---------------------------------------------------------------------------


def run_batch(
    cfg: SimConfig,
    n_epochs: int = config.BATCH_EPOCHS,
    workers: int = config.BATCH_WORKERS,
    k: int = config.NUM_SAMPLES,
    scene: Scene | None = None,
) -> BatchReport:
    """
    Run a seeded Monte Carlo batch of epochs on one generated scene.

    Parameters
    ----------
    cfg : SimConfig
        Scenario parameters; ``cfg.seed`` is the root seed.
    n_epochs : int
        Number of epochs.
    workers : int
        Worker processes; 1 runs in-process.
    k : int
        Samples per mixture model.
    scene : Scene or None
        Scene to use; generated from ``cfg`` when None.

    Returns
    -------
    BatchReport
    """
    if n_epochs < 1:
        raise ValueError(f"n_epochs must be >= 1, got {n_epochs}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if scene is None:
        scene = generate_scene(cfg, RandomStream(cfg.seed).spawn(0))

    jobs = [(scene, cfg, i, k) for i in range(n_epochs)]
    if workers == 1:
        results = [_run_one_packed(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one_packed, jobs, chunksize=max(1, n_epochs // (4 * workers))))

    records = [r for r in results if "stage" not in r]
    failures = [r for r in results if "stage" in r]
    for f in failures:
        logger.warning("Epoch %d failed in %s: %s", f["epoch_idx"], f["stage"], f["message"])

    df = pd.DataFrame(records, columns=RECORD_COLUMNS)
    report = BatchReport(df, failures, n_requested=n_epochs, seed=cfg.seed)
    logger.info(
        "Batch done: %d/%d epochs, accuracy baseline %.1f%% enhanced %.1f%%",
        report.n_successful,
        n_epochs,
        report.accuracy_baseline * 100,
        report.accuracy_enhanced * 100,
    )
    return report
