"""
Mode selection strategies.

Two interchangeable selectors sharing one call signature:
  - baseline SPC:  one mixture from the raw pseudoranges, argmax posterior
  - enhanced SPC:  M mixtures, one per assumed mode with multipath-corrected
                   pseudoranges, combined through the M×M consistency matrix

Row i of the consistency matrix is the posterior of model i (receiver
assumed in mode i). Model i is *self-consistent* when its most probable
mode is i. Selection then depends on how many models are self-consistent:

  case 1  exactly one:   take that model's argmax
  case 2  two or more:   take the self-consistent i with the largest probs[i][i]
  case 3  none:          take the i with the largest probs[i][i]

Every tie goes to the lowest mode id.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Literal, Protocol

import numpy as np

import config
from src.inference.posterior import PosteriorState, posterior_from_mixture
from src.inference.rng import RandomStream
from src.multipath.correction import MultipathEstimate, build_enhanced_mixture, estimate_corrections
from src.scene.model import Epoch, Scene
from src.shadow.matching import ModeSet
from src.spc.mixture import build_spc_mixture

logger = logging.getLogger(__name__)

Method = Literal["baseline_spc", "enhanced_spc"]
CaseType = Literal[1, 2, 3, "baseline"]


# ---------------------------------------------------------------------------
# Result containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConsistencyMatrix:
    """
    M×M posteriors: ``probs[i, m]`` is mode m's probability under model i.

    ``estimates[i]`` holds the multipath corrections model i was built from.
    """

    probs: np.ndarray
    estimates: tuple[tuple[MultipathEstimate, ...], ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] == 0:
            raise ValueError(f"consistency matrix must be square and non-empty, got {p.shape}")
        if np.any(p <= 0.0):
            raise ValueError("consistency matrix entries must be positive")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("consistency matrix rows must sum to 1")
        object.__setattr__(self, "probs", p)

    @property
    def n_modes(self) -> int:
        return self.probs.shape[0]

    @property
    def row_argmax(self) -> np.ndarray:
        return np.argmax(self.probs, axis=1)

    @property
    def consistent_rows(self) -> list[int]:
        """Models whose most probable mode is their own assumed mode."""
        return [i for i, m in enumerate(self.row_argmax) if m == i]

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.probs).copy()


@dataclass(frozen=True, eq=False)
class SelectionResult:
    """
    Chosen mode and the evidence behind it.

    Parameters
    ----------
    method : str
        "baseline_spc" or "enhanced_spc".
    chosen_mode_id : int
        Selected mode.
    case_type : 1, 2, 3 or "baseline"
        "baseline" iff method is baseline_spc.
    row_probs : np.ndarray
        The probabilities the decision was read from.
    """

    method: Method
    chosen_mode_id: int
    case_type: CaseType
    row_probs: np.ndarray

    def __post_init__(self) -> None:
        if (self.case_type == "baseline") != (self.method == "baseline_spc"):
            raise ValueError(f"case_type {self.case_type!r} does not match method {self.method!r}")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "chosen_mode_id": int(self.chosen_mode_id),
            "case_type": self.case_type,
            "row_probs": [float(p) for p in self.row_probs],
        }


# ---------------------------------------------------------------------------
# Baseline
# ---------------------------------------------------------------------------


def select_baseline(
    epoch: Epoch,
    mode_set: ModeSet,
    rng: RandomStream,
    anchor: tuple[float, float],
    k: int = config.NUM_SAMPLES,
) -> SelectionResult:
    """
    Existing SPC selection: one mixture from uncorrected pseudoranges.

    Parameters
    ----------
    epoch : Epoch
        Observations.
    mode_set : ModeSet
        Candidate modes.
    rng : RandomStream
        Sample stream; consumed.
    anchor : (float, float)
        SPC linearisation point.
    k : int
        Number of mixture samples.

    Returns
    -------
    SelectionResult
    """
    model = build_spc_mixture(epoch, mode_set, anchor)
    posterior = posterior_from_mixture(model, k, rng)
    return SelectionResult("baseline_spc", posterior.best_mode, "baseline", posterior.probs)


# ---------------------------------------------------------------------------
# Enhanced
# ---------------------------------------------------------------------------


def consistency_matrix(
    scene: Scene,
    epoch: Epoch,
    mode_set: ModeSet,
    rng: RandomStream,
    k: int = config.NUM_SAMPLES,
) -> ConsistencyMatrix:
    """
    Posterior of every enhanced model, one row per assumed mode.

    Row i samples from ``rng.spawn(i + 1)`` so rows never share samples and
    adding a mode leaves the other rows unchanged. (Sub-stream 0 is left for
    the baseline model.)
    """
    rows: list[np.ndarray] = []
    all_estimates: list[tuple[MultipathEstimate, ...]] = []
    for mode in mode_set:
        estimates = estimate_corrections(scene, mode, epoch)
        model = build_enhanced_mixture(scene, mode_set, epoch, mode, estimates=estimates)
        posterior: PosteriorState = posterior_from_mixture(model, k, rng.spawn(mode.id + 1))
        logger.debug("model %d posterior %s", mode.id, np.round(posterior.probs, 4))
        rows.append(posterior.probs)
        all_estimates.append(tuple(estimates))
    return ConsistencyMatrix(np.vstack(rows), tuple(all_estimates))


def select_enhanced(matrix: ConsistencyMatrix) -> SelectionResult:
    """Case-based selection from a consistency matrix."""
    probs = matrix.probs
    consistent = matrix.consistent_rows
    if len(consistent) == 1:
        row = consistent[0]
        chosen = int(np.argmax(probs[row]))
        return SelectionResult("enhanced_spc", chosen, 1, probs[row].copy())

    candidates = consistent if consistent else list(range(matrix.n_modes))
    case: CaseType = 2 if consistent else 3
    diag = matrix.diagonal
    chosen = max(candidates, key=lambda i: (diag[i], -i))
    return SelectionResult("enhanced_spc", int(chosen), case, diag)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


class Selector(Protocol):
    """Common call signature of the selection strategies."""

    def __call__(
        self,
        scene: Scene,
        epoch: Epoch,
        mode_set: ModeSet,
        rng: RandomStream,
        k: int = config.NUM_SAMPLES,
    ) -> SelectionResult: ...


def _baseline_selector(
    scene: Scene,
    epoch: Epoch,
    mode_set: ModeSet,
    rng: RandomStream,
    k: int = config.NUM_SAMPLES,
) -> SelectionResult:
    return select_baseline(epoch, mode_set, rng.spawn(0), scene.anchor, k)


def _enhanced_selector(
    scene: Scene,
    epoch: Epoch,
    mode_set: ModeSet,
    rng: RandomStream,
    k: int = config.NUM_SAMPLES,
) -> SelectionResult:
    return select_enhanced(consistency_matrix(scene, epoch, mode_set, rng, k))


def get_selector(method: str) -> Callable[..., SelectionResult]:
    """
    Factory for selection strategies by name.

    Parameters
    ----------
    method : str
        'spc' (baseline) or 'enhanced'.

    Returns
    -------
    Selector
    """
    selectors: dict[str, Selector] = {
        "spc": _baseline_selector,
        "enhanced": _enhanced_selector,
    }
    if method not in selectors:
        raise ValueError(
            f"Unknown selection method '{method}'. Choose from: {list(selectors.keys())}"
        )
    return selectors[method]
