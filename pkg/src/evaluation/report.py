"""
Evaluation outputs for a completed batch run.

Writes the summary table (report.csv), plot-ready CSVs (accuracy bars,
per-epoch error traces, case counts, mode counts) and a text report that
is printed and saved next to the table.
"""

from __future__ import annotations

import logging
from pathlib import Path

import pandas as pd

import config
from src.errors import RunDirError
from src.evaluation.metrics import RECORD_COLUMNS, EvaluationReport, compute_evaluation_report
from src.scene.io import read_json, write_text_atomic

logger = logging.getLogger(__name__)

SEP = "=" * 66
SEP2 = "-" * 66

REPORT_COLUMNS = [
    "method",
    "accuracy",
    "accuracy_ci_low",
    "accuracy_ci_high",
    "rms_error_m",
    "n_epochs",
    "case_1",
    "case_2",
    "case_3",
]


def _write_csv(df: pd.DataFrame, path: Path) -> Path:
    return write_text_atomic(path, df.to_csv(index=False, float_format="%.10g"))


def load_records(run_dir: str | Path) -> pd.DataFrame:
    """Read records.csv from a batch run directory, checking required files."""
    run_dir = Path(run_dir)
    required = [config.RECORDS_FILE, config.MANIFEST_FILE]
    missing = [name for name in required if not (run_dir / name).is_file()]
    if missing:
        raise RunDirError(str(run_dir), missing)
    records = pd.read_csv(run_dir / config.RECORDS_FILE)
    absent = [c for c in RECORD_COLUMNS if c not in records.columns]
    if absent:
        raise RunDirError(str(run_dir), [f"{config.RECORDS_FILE}:{c}" for c in absent])
    return records


def summary_table(ev: EvaluationReport) -> pd.DataFrame:
    """One row per method: ideal, baseline_spc, enhanced_spc."""
    rows = [
        {
            "method": "ideal",
            "accuracy": 1.0 if ev.n_epochs else 0.0,
            "accuracy_ci_low": None,
            "accuracy_ci_high": None,
            "rms_error_m": ev.rms_ideal,
            "n_epochs": ev.n_epochs,
        },
        {
            "method": "baseline_spc",
            "accuracy": ev.accuracy_baseline,
            "accuracy_ci_low": ev.ci_baseline[0],
            "accuracy_ci_high": ev.ci_baseline[1],
            "rms_error_m": ev.rms_baseline,
            "n_epochs": ev.n_epochs,
        },
        {
            "method": "enhanced_spc",
            "accuracy": ev.accuracy_enhanced,
            "accuracy_ci_low": ev.ci_enhanced[0],
            "accuracy_ci_high": ev.ci_enhanced[1],
            "rms_error_m": ev.rms_enhanced,
            "n_epochs": ev.n_epochs,
            **{f"case_{c}": n for c, n in ev.case_counts.items()},
        },
    ]
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def write_plot_data(
    records: pd.DataFrame,
    ev: EvaluationReport,
    plots_dir: str | Path,
) -> list[Path]:
    """Emit plot-ready CSVs; returns the written paths."""
    plots_dir = Path(plots_dir)
    bars = pd.DataFrame(
        [
            {"method": "baseline_spc", "accuracy": ev.accuracy_baseline,
             "ci_low": ev.ci_baseline[0], "ci_high": ev.ci_baseline[1]},
            {"method": "enhanced_spc", "accuracy": ev.accuracy_enhanced,
             "ci_low": ev.ci_enhanced[0], "ci_high": ev.ci_enhanced[1]},
        ]
    )
    traces = records[["epoch_idx", "ideal_err_m", "baseline_err_m", "enhanced_err_m"]]
    cases = pd.DataFrame(
        [
            {"case": c, "count": ev.case_counts[c], "correct": ev.case_tallies[c][0], "wrong": ev.case_tallies[c][1]}
            for c in ev.case_counts
        ]
    )
    modes = pd.DataFrame(
        [{"M": m, "count": n} for m, n in ev.mode_counts.items()], columns=["M", "count"]
    )
    return [
        _write_csv(bars, plots_dir / "accuracy_bars.csv"),
        _write_csv(traces, plots_dir / "error_traces.csv"),
        _write_csv(cases, plots_dir / "case_counts.csv"),
        _write_csv(modes, plots_dir / "mode_counts.csv"),
    ]


def generate_report(
    ev: EvaluationReport,
    n_failed: int = 0,
    seed: int | None = None,
    path: str | Path | None = None,
) -> str:
    """
    Render the evaluation as text.

    Parameters
    ----------
    ev : EvaluationReport
        Computed metrics.
    n_failed : int
        Epochs that failed and were excluded.
    seed : int or None
        Root seed of the run, shown in the header.
    path : str, Path or None
        If given, the text is also saved there.

    Returns
    -------
    str
        Full report text.
    """
    lines: list[str] = []

    def add(text: str = "") -> None:
        lines.append(text)

    add(SEP)
    add("  MODE AMBIGUITY REDUCTION: BATCH EVALUATION")
    add(SEP)
    if seed is not None:
        add(f"  Seed: {seed}")
    add(f"  Epochs evaluated: {ev.n_epochs}   (failed: {n_failed})")
    add()

    add(SEP)
    add("  MODE SELECTION ACCURACY")
    add(SEP)
    add(f"  {'Method':<16}  {'All epochs':>10}  {'95% CI':>15}  {'M >= 2':>8}")
    add(f"  {'─' * 16}  {'─' * 10}  {'─' * 15}  {'─' * 8}")
    for name, acc, ci, mm in (
        ("Baseline SPC", ev.accuracy_baseline, ev.ci_baseline, ev.multimodal_accuracy_baseline),
        ("Enhanced SPC", ev.accuracy_enhanced, ev.ci_enhanced, ev.multimodal_accuracy_enhanced),
    ):
        add(
            f"  {name:<16}  {acc * 100:>9.1f}%  [{ci[0] * 100:5.1f}, {ci[1] * 100:5.1f}]  {mm * 100:>7.1f}%"
        )
    add(f"  Multi-modal epochs: {ev.multimodal_epochs}")
    add(f"  Exact sign test (discordant epochs): p = {ev.sign_test_pvalue:.4f}")
    add()

    add(SEP)
    add("  RMS POSITIONING ERROR (centroid of selected mode)")
    add(SEP)
    add(f"  Ideal (truth mode):   {ev.rms_ideal:>8.2f} m")
    add(f"  Baseline SPC:         {ev.rms_baseline:>8.2f} m")
    add(f"  Enhanced SPC:         {ev.rms_enhanced:>8.2f} m")
    add()

    add(SEP)
    add("  CASE BREAKDOWN (enhanced SPC)")
    add(SEP)
    add(f"  {'Case':<8}  {'Count':>6}  {'Correct':>8}  {'Wrong':>6}")
    add(f"  {'─' * 8}  {'─' * 6}  {'─' * 8}  {'─' * 6}")
    for case, count in ev.case_counts.items():
        right, wrong = ev.case_tallies[case]
        add(f"  {case:<8}  {count:>6}  {right:>8}  {wrong:>6}")
    add()
    add(SEP2)
    add("  Modes per epoch: " + ", ".join(f"M={m}: {n}" for m, n in ev.mode_counts.items()))
    add(SEP)

    text = "\n".join(lines)
    print(text)

    if path is not None:
        write_text_atomic(path, text + "\n")
        logger.info("Report saved → %s", path)
    return text


def evaluate_run(
    run_dir: str | Path,
    out: str | Path | None = None,
    plots_dir: str | Path | None = None,
) -> tuple[EvaluationReport, list[Path]]:
    """
    Evaluate a batch run directory and write every report artefact.

    Returns the metrics and the list of files written.
    """
    run_dir = Path(run_dir)
    records = load_records(run_dir)
    ev = compute_evaluation_report(records)

    out = Path(out) if out is not None else run_dir / config.REPORT_FILE
    plots_dir = Path(plots_dir) if plots_dir is not None else run_dir / "plots"
    written = [_write_csv(summary_table(ev), out)]
    written += write_plot_data(records, ev, plots_dir)

    batch_file = run_dir / config.BATCH_REPORT_FILE
    n_failed, seed = 0, None
    if batch_file.is_file():
        batch = read_json(batch_file)
        n_failed, seed = int(batch.get("n_failed", 0)), batch.get("seed")
    text_path = out.with_name(config.REPORT_TEXT_FILE)
    generate_report(ev, n_failed=n_failed, seed=seed, path=text_path)
    written.append(text_path)
    return ev, written
