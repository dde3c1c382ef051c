"""
Mixture sampling and the single-update Dirichlet posterior over modes.

K range offsets are drawn from the equal-weight mixture. Every sample that
falls inside satellite s's interval for mode m adds 1/S to that mode's
pseudocount, starting from α_m = 1:

    α_m = 1 + (Σ_s Σ_k 1[b_k ∈ I_{s,m}]) / S

The posterior mode probabilities are the normalised pseudocounts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

import config
from src.inference.rng import RandomStream
from src.spc.mixture import MixtureModel, inflate
from src.spc.planes import RangeOffsetInterval

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PosteriorState:
    """
    Dirichlet pseudocounts and the implied mode probabilities.

    Attributes
    ----------
    alphas : np.ndarray
        Pseudocounts, shape (M,), each ≥ 1.
    probs : np.ndarray
        alphas / alphas.sum().
    """

    alphas: np.ndarray
    probs: np.ndarray

    @classmethod
    def from_alphas(cls, alphas: np.ndarray) -> PosteriorState:
        a = np.asarray(alphas, dtype=float)
        if a.ndim != 1 or len(a) == 0:
            raise ValueError("alphas must be a non-empty vector")
        if np.any(a < 1.0):
            raise ValueError("pseudocounts must be >= 1")
        return cls(a, a / a.sum())

    @property
    def n_modes(self) -> int:
        return len(self.alphas)

    @property
    def best_mode(self) -> int:
        """Most probable mode; ties go to the lowest id."""
        return int(np.argmax(self.probs))


def sample_mixture(model: MixtureModel, k: int, rng: RandomStream) -> np.ndarray:
    """
    Draw ``k`` range offsets from an equal-weight mixture.

    Each draw consumes two stream outputs: the first picks a satellite
    uniformly, the second a position uniformly over that satellite's merged
    support.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    u = rng.uniform(2 * k)
    n_sat = model.n_satellites
    sat_idx = np.minimum((u[0::2] * n_sat).astype(np.int64), n_sat - 1)
    pos_u = u[1::2]

    samples = np.empty(k)
    for s, miud in enumerate(model.miuds):
        mask = sat_idx == s
        if not mask.any():
            continue
        bounds = np.asarray(miud.intervals, dtype=float).reshape(-1, 2)
        lengths = bounds[:, 1] - bounds[:, 0]
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        pos = pos_u[mask] * cum[-1]
        which = np.clip(np.searchsorted(cum, pos, side="right") - 1, 0, len(lengths) - 1)
        values = bounds[which, 0] + (pos - cum[which])
        samples[mask] = np.minimum(values, bounds[which, 1])
    return samples


def interval_bounds(
    intervals: Sequence[Sequence[RangeOffsetInterval]],
    half_width: float = config.MIUD_HALF_WIDTH,
) -> tuple[np.ndarray, np.ndarray]:
    """(lo, hi) arrays of shape (S, M) after zero-width inflation."""
    lo = np.empty((len(intervals), len(intervals[0])))
    hi = np.empty_like(lo)
    for s, row in enumerate(intervals):
        for m, iv in enumerate(row):
            lo[s, m], hi[s, m] = inflate(iv.lo, iv.hi, half_width)
    return lo, hi


def update_posterior(
    samples: np.ndarray,
    intervals: Sequence[Sequence[RangeOffsetInterval]],
    n_satellites: int,
    n_modes: int,
    half_width: float = config.MIUD_HALF_WIDTH,
) -> PosteriorState:
    """
    Single pseudocount update from one batch of samples.

    Parameters
    ----------
    samples : np.ndarray
        Range-offset samples, shape (K,).
    intervals : sequence of sequences of RangeOffsetInterval
        Unmerged per-mode intervals, ``intervals[s][m]``.
    n_satellites, n_modes : int
        S and M.
    half_width : float
        Zero-width inflation applied before counting (endpoints inclusive).

    Returns
    -------
    PosteriorState
    """
    b = np.asarray(samples, dtype=float)
    if b.size == 0:
        raise ValueError("samples must be non-empty")
    if len(intervals) != n_satellites or any(len(row) != n_modes for row in intervals):
        raise ValueError(f"intervals must be indexed by all {n_satellites}×{n_modes} pairs")
    lo, hi = interval_bounds(intervals, half_width)
    hits = (b[None, None, :] >= lo[..., None]) & (b[None, None, :] <= hi[..., None])
    counts = hits.sum(axis=(0, 2))  # integer tallies per mode
    return PosteriorState.from_alphas(1.0 + counts / n_satellites)


def posterior_from_mixture(
    model: MixtureModel,
    k: int,
    rng: RandomStream,
    half_width: float = config.MIUD_HALF_WIDTH,
) -> PosteriorState:
    """Sample the mixture and update the posterior with its own intervals."""
    intervals = model.intervals
    samples = sample_mixture(model, k, rng)
    return update_posterior(samples, intervals, len(intervals), len(intervals[0]), half_width)
