"""
Sub-command implementations behind main.py.

    simulate   generated scene + labelled epoch files
    batch      seeded Monte Carlo run → records.csv, batch_report.json
    select     one epoch through baseline and/or enhanced selection
    eval       report.csv, report.txt and plot-ready CSVs for a batch run

Each command writes its outputs atomically and leaves a manifest beside them.
Commands return the process exit code: 0 when every requested epoch
completed, 1 otherwise. Invalid arguments or inputs raise ``ValueError``
(``SchemaError`` included) or ``FileNotFoundError``, which main.py maps to
exit code 2.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any

import config
from src.cli.manifest import RunManifest
from src.errors import SchemaError, SimulationError
from src.evaluation.report import evaluate_run
from src.inference.rng import RandomStream
from src.multipath.correction import write_multipath_debug_csv
from src.scene.io import (
    load_epoch,
    load_scene,
    load_visibility,
    read_json,
    save_epoch,
    save_scene,
    write_json_atomic,
    write_text_atomic,
)
from src.scene.model import Epoch, Scene
from src.selector.selection import (
    ConsistencyMatrix,
    SelectionResult,
    consistency_matrix,
    get_selector,
    select_enhanced,
)
from src.shadow.matching import ModeSet, load_mode_set, modes_from_visibility
from src.sim.batch import run_batch, simulate_epoch
from src.sim.scenario import SimConfig, generate_scene
from src.spc.planes import build_planes, project_modes, write_spc_debug_csv

logger = logging.getLogger(__name__)

SELECT_METHODS = {"spc": ["spc"], "enhanced": ["enhanced"], "both": ["spc", "enhanced"]}


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def resolve_seed(seed: int | None) -> int:
    """Effective seed: the URM_SEED environment variable wins over ``seed``."""
    raw = os.environ.get(config.SEED_ENV_VAR)
    if raw is not None and raw.strip():
        try:
            return int(raw)
        except ValueError as exc:
            raise SchemaError(config.SEED_ENV_VAR, f"must be an integer, got '{raw}'") from exc
    return config.SIM_SEED if seed is None else int(seed)


def load_sim_config(path: str | Path | None, seed: int) -> SimConfig:
    """Scenario config from a JSON file (or defaults) with the effective seed applied."""
    data: dict[str, Any] = {}
    if path is not None:
        raw = read_json(path)
        if not isinstance(raw, dict):
            raise SchemaError("config", "must be a JSON object")
        data = dict(raw)
    data["seed"] = seed
    return SimConfig.from_dict(data)


def _check_positive(name: str, value: int) -> None:
    if value < 1:
        raise ValueError(f"--{name} must be >= 1, got {value}")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(
    config_path: str | Path | None,
    seed: int | None,
    epochs: int,
    out_dir: str | Path,
) -> int:
    """
    Generate a scene and ``epochs`` labelled epochs.

    Epoch ``i`` is drawn from the same per-epoch stream the batch uses, so
    ``epochs/epoch_0003.json`` is exactly the fourth epoch of a batch with
    the same seed and config.
    """
    _check_positive("epochs", epochs)
    seed = resolve_seed(seed)
    cfg = load_sim_config(config_path, seed)
    out_dir = Path(out_dir)

    scene = generate_scene(cfg, RandomStream(seed).spawn(0))
    written = [save_scene(scene, out_dir / config.SCENE_FILE)]
    n_failed = 0
    for i in range(epochs):
        try:
            labeled = simulate_epoch(scene, cfg, i)
        except SimulationError as exc:
            n_failed += 1
            logger.warning("Epoch %d not generated: %s", i, exc)
            continue
        path = out_dir / config.EPOCH_DIR / f"epoch_{i:04d}.json"
        written.append(save_epoch(labeled.epoch, path, labeled.visibility, labeled.labels()))

    manifest = RunManifest(
        "simulate",
        config_path=None if config_path is None else str(config_path),
        seed=seed,
        arguments={"epochs": epochs, "sim_config": cfg.to_dict()},
    )
    if config_path is not None:
        manifest.add_input(config_path)
    manifest.add_outputs(written, out_dir)
    manifest.write(out_dir)
    logger.info("Wrote scene and %d/%d epochs to %s", len(written) - 1, epochs, out_dir)
    return 0 if n_failed == 0 else 1


# ---------------------------------------------------------------------------
# batch
# ---------------------------------------------------------------------------


def cmd_batch(
    config_path: str | Path | None,
    seed: int | None,
    epochs: int,
    out_dir: str | Path,
    workers: int = config.BATCH_WORKERS,
    k: int = config.NUM_SAMPLES,
) -> int:
    """Run a Monte Carlo batch and write records.csv and batch_report.json."""
    _check_positive("epochs", epochs)
    _check_positive("workers", workers)
    _check_positive("k", k)
    seed = resolve_seed(seed)
    cfg = load_sim_config(config_path, seed)
    out_dir = Path(out_dir)

    report = run_batch(cfg, n_epochs=epochs, workers=workers, k=k)
    written = [
        write_text_atomic(
            out_dir / config.RECORDS_FILE,
            report.records.to_csv(index=False, float_format="%.10g"),
        ),
        write_json_atomic(out_dir / config.BATCH_REPORT_FILE, report.to_dict()),
    ]
    manifest = RunManifest(
        "batch",
        config_path=None if config_path is None else str(config_path),
        seed=seed,
        # workers is left out: outputs do not depend on it
        arguments={"epochs": epochs, "k": k, "sim_config": cfg.to_dict()},
    )
    if config_path is not None:
        manifest.add_input(config_path)
    manifest.add_outputs(written, out_dir)
    manifest.write(out_dir)
    logger.info("Batch written to %s (%d failed epochs)", out_dir, report.n_failed)
    return 0 if report.n_failed == 0 else 1


# ---------------------------------------------------------------------------
# select
# ---------------------------------------------------------------------------


def check_sat_ids(mode_set: ModeSet, sat_ids: list[str]) -> None:
    """Modes computed from other satellites than the epoch's are rejected."""
    if mode_set.sat_ids and set(mode_set.sat_ids) != set(sat_ids):
        only_modes = sorted(set(mode_set.sat_ids) - set(sat_ids))
        only_epoch = sorted(set(sat_ids) - set(mode_set.sat_ids))
        raise SchemaError(
            "sat_ids",
            f"modes and epoch disagree (only in modes: {only_modes}, only in epoch: {only_epoch})",
        )


def _write_debug(
    debug_dir: Path,
    scene: Scene,
    epoch: Epoch,
    mode_set: ModeSet,
    matrix: ConsistencyMatrix | None,
) -> list[Path]:
    planes = build_planes(epoch, scene.anchor, mode_set.receiver_plane_z)
    written = [write_spc_debug_csv(planes, project_modes(planes, mode_set), debug_dir / "spc_debug.csv")]
    if matrix is not None:
        by_mode = {m: list(est) for m, est in enumerate(matrix.estimates)}
        written.append(write_multipath_debug_csv(by_mode, debug_dir / "multipath_debug.csv"))
    return written


def cmd_select(
    scene_path: str | Path,
    epoch_path: str | Path,
    out: str | Path,
    method: str = "both",
    modes_path: str | Path | None = None,
    k: int = config.NUM_SAMPLES,
    seed: int | None = None,
    debug_dir: str | Path | None = None,
) -> int:
    """
    Run mode selection on one epoch and write the result JSON.

    Without ``modes_path`` the modes are computed from the scene and the
    visibility map stored in the epoch file.
    """
    if method not in SELECT_METHODS:
        raise ValueError(f"Unknown method '{method}'. Choose from: {list(SELECT_METHODS)}")
    _check_positive("k", k)
    seed = resolve_seed(seed)
    scene = load_scene(scene_path)
    epoch = load_epoch(epoch_path).sorted()

    if modes_path is not None:
        mode_set = load_mode_set(modes_path)
        check_sat_ids(mode_set, epoch.sat_ids)
    else:
        visibility = load_visibility(epoch_path)
        if visibility is None:
            raise SchemaError("visibility", "required in the epoch file when --modes is not given")
        if set(visibility) != set(epoch.sat_ids):
            raise SchemaError("visibility", "keys must match the epoch's sat_ids")
        mode_set = modes_from_visibility(scene, visibility, epoch.positions)

    rng = RandomStream(seed)
    results: list[SelectionResult] = []
    matrix: ConsistencyMatrix | None = None
    for name in SELECT_METHODS[method]:
        if name == "enhanced":
            matrix = consistency_matrix(scene, epoch, mode_set, rng, k)
            results.append(select_enhanced(matrix))
        else:
            results.append(get_selector(name)(scene, epoch, mode_set, rng, k))
        logger.info(
            "%s: mode %d (case %s)",
            results[-1].method,
            results[-1].chosen_mode_id,
            results[-1].case_type,
        )

    payload = {
        "seed": seed,
        "k": k,
        "sat_ids": epoch.sat_ids,
        "modes": [
            {"id": m.id, "area": m.area, "centroid": [float(c) for c in m.centroid]}
            for m in mode_set
        ],
        "results": [r.to_dict() for r in results],
        "matrix": None if matrix is None else matrix.probs.tolist(),
    }
    out = Path(out)
    written = [write_json_atomic(out, payload)]
    if debug_dir is not None:
        written += _write_debug(Path(debug_dir), scene, epoch, mode_set, matrix)

    manifest = RunManifest(
        "select",
        seed=seed,
        arguments={"method": method, "k": k},
    )
    manifest.add_input(scene_path)
    manifest.add_input(epoch_path)
    if modes_path is not None:
        manifest.add_input(modes_path)
    manifest.add_outputs(written, out.parent)
    manifest.write(out.parent, f"{out.stem}.manifest.json")
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(
    run_dir: str | Path,
    out: str | Path | None = None,
    plots_dir: str | Path | None = None,
) -> int:
    """Evaluate a batch run directory; raises RunDirError when it is incomplete."""
    run_dir = Path(run_dir)
    ev, written = evaluate_run(run_dir, out, plots_dir)
    out_base = Path(written[0]).parent
    manifest = RunManifest("eval", arguments={"run_dir": str(run_dir)})
    manifest.add_input(run_dir / config.RECORDS_FILE)
    manifest.add_outputs(written, out_base)
    manifest.write(out_base, "eval_manifest.json")
    logger.info(
        "Evaluated %d epochs: baseline %.1f%%, enhanced %.1f%%",
        ev.n_epochs,
        ev.accuracy_baseline * 100,
        ev.accuracy_enhanced * 100,
    )
    return 0
