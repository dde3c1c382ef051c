"""
Mode-selection and positioning metrics over a batch of epochs.

Mode-selection accuracy, RMS positioning error of the chosen mode's
centroid, case histogram, per-case correct/wrong tallies, Clopper-Pearson
accuracy intervals, and an exact sign test on the epochs where the two
methods disagree about correctness.

All functions accept the per-epoch records DataFrame with columns
``epoch_idx, truth_mode, M, baseline_choice, enhanced_choice, case,
baseline_err_m, enhanced_err_m, ideal_err_m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import binomtest

import config

RECORD_COLUMNS = [
    "epoch_idx",
    "truth_mode",
    "M",
    "baseline_choice",
    "enhanced_choice",
    "case",
    "baseline_err_m",
    "enhanced_err_m",
    "ideal_err_m",
]
METHODS = {"baseline": "baseline_choice", "enhanced": "enhanced_choice"}
CASES = ("1", "2", "3")


@dataclass
class EvaluationReport:
    """Container for all computed selection metrics."""

    n_epochs: int
    accuracy_baseline: float
    accuracy_enhanced: float
    ci_baseline: tuple[float, float]
    ci_enhanced: tuple[float, float]
    multimodal_epochs: int
    multimodal_accuracy_baseline: float
    multimodal_accuracy_enhanced: float
    rms_ideal: float
    rms_baseline: float
    rms_enhanced: float
    case_counts: dict[str, int]
    case_tallies: dict[str, tuple[int, int]]
    mode_counts: dict[int, int]
    sign_test_pvalue: float

    def __str__(self) -> str:
        lines = [
            f"  Epochs:                    {self.n_epochs:>8}",
            f"  Accuracy (baseline SPC):   {self.accuracy_baseline * 100:>7.1f}%"
            f"  [{self.ci_baseline[0] * 100:5.1f}, {self.ci_baseline[1] * 100:5.1f}]",
            f"  Accuracy (enhanced SPC):   {self.accuracy_enhanced * 100:>7.1f}%"
            f"  [{self.ci_enhanced[0] * 100:5.1f}, {self.ci_enhanced[1] * 100:5.1f}]",
            f"  Multi-modal epochs:        {self.multimodal_epochs:>8}",
            f"  RMS error (ideal):         {self.rms_ideal:>8.2f} m",
            f"  RMS error (baseline):      {self.rms_baseline:>8.2f} m",
            f"  RMS error (enhanced):      {self.rms_enhanced:>8.2f} m",
            f"  Sign test p-value:         {self.sign_test_pvalue:>8.4f}",
        ]
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Individual metric functions
# ---------------------------------------------------------------------------


def correct_mask(records: pd.DataFrame, method: str) -> pd.Series:
    """Per-epoch correctness of a method; epochs without a truth mode count as wrong."""
    choice = records[METHODS[method]].astype(float)
    truth = records["truth_mode"].astype(float)
    return truth.notna() & (choice == truth)


def accuracy(records: pd.DataFrame, method: str) -> float:
    """Fraction of epochs where the method chose the truth mode."""
    if len(records) == 0:
        return 0.0
    return float(correct_mask(records, method).mean())


def rms_error(errors: pd.Series | np.ndarray) -> float:
    """Root-mean-square of the finite entries (NaN when there are none)."""
    e = np.asarray(errors, dtype=float)
    e = e[np.isfinite(e)]
    if e.size == 0:
        return float("nan")
    return float(np.sqrt(np.mean(e**2)))


def case_histogram(records: pd.DataFrame) -> dict[str, int]:
    """Occurrences of each enhanced-selection case."""
    counts = records["case"].astype(str).value_counts()
    return {c: int(counts.get(c, 0)) for c in CASES}


def case_tallies(records: pd.DataFrame) -> dict[str, tuple[int, int]]:
    """(correct, wrong) enhanced selections per case."""
    ok = correct_mask(records, "enhanced")
    cases = records["case"].astype(str)
    return {c: (int((ok & (cases == c)).sum()), int((~ok & (cases == c)).sum())) for c in CASES}


def mode_count_histogram(records: pd.DataFrame) -> dict[int, int]:
    """Distribution of the number of modes per epoch."""
    counts = records["M"].astype(int).value_counts().sort_index()
    return {int(m): int(n) for m, n in counts.items()}


def clopper_pearson(
    successes: int,
    trials: int,
    level: float = config.CONFIDENCE_LEVEL,
) -> tuple[float, float]:
    """Exact binomial confidence interval for a success fraction."""
    if trials == 0:
        return (0.0, 1.0)
    ci = binomtest(successes, trials).proportion_ci(confidence_level=level, method="exact")
    return (float(ci.low), float(ci.high))


def paired_sign_test(records: pd.DataFrame) -> float:
    """
    Two-sided exact sign test on discordant epochs.

    Compares epochs where only the enhanced method was right against those
    where only the baseline was right. Returns 1.0 when there are none.
    """
    base = correct_mask(records, "baseline")
    enh = correct_mask(records, "enhanced")
    only_enh = int((enh & ~base).sum())
    only_base = int((base & ~enh).sum())
    if only_enh + only_base == 0:
        return 1.0
    return float(binomtest(only_enh, only_enh + only_base, 0.5).pvalue)


def compute_evaluation_report(
    records: pd.DataFrame,
    level: float = config.CONFIDENCE_LEVEL,
) -> EvaluationReport:
    """
    Compute every selection metric from a records DataFrame.

    Parameters
    ----------
    records : pd.DataFrame
        One row per successful epoch.
    level : float
        Confidence level of the accuracy intervals.

    Returns
    -------
    EvaluationReport
    """
    n = len(records)
    multimodal = records[records["M"] >= 2]
    # positioning errors are compared on epochs whose truth lies in a mode
    located = records[records["truth_mode"].notna()]
    return EvaluationReport(
        n_epochs=n,
        accuracy_baseline=accuracy(records, "baseline"),
        accuracy_enhanced=accuracy(records, "enhanced"),
        ci_baseline=clopper_pearson(int(correct_mask(records, "baseline").sum()), n, level),
        ci_enhanced=clopper_pearson(int(correct_mask(records, "enhanced").sum()), n, level),
        multimodal_epochs=len(multimodal),
        multimodal_accuracy_baseline=accuracy(multimodal, "baseline"),
        multimodal_accuracy_enhanced=accuracy(multimodal, "enhanced"),
        rms_ideal=rms_error(located["ideal_err_m"]),
        rms_baseline=rms_error(located["baseline_err_m"]),
        rms_enhanced=rms_error(located["enhanced_err_m"]),
        case_counts=case_histogram(records),
        case_tallies=case_tallies(records),
        mode_counts=mode_count_histogram(records),
        sign_test_pvalue=paired_sign_test(records),
    )
