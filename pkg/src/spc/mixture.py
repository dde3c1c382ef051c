"""
Multi-interval uniform distributions (MIUD) and their equal-weight mixture.

Each satellite projects all M modes to range-offset intervals. The MIUD of
that satellite is uniform over the union of its intervals; overlapping
intervals are merged first so the density integrates to one. The mixture
averages the S per-satellite densities with weight 1/S each.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

import config
from src.scene.model import Epoch
from src.shadow.matching import ModeSet
from src.spc.planes import RangeOffsetInterval, build_planes, project_modes


def inflate(lo: float, hi: float, half_width: float = config.MIUD_HALF_WIDTH) -> tuple[float, float]:
    """Widen intervals narrower than 2·half_width to midpoint ± half_width."""
    if hi - lo < 2.0 * half_width:
        mid = 0.5 * (lo + hi)
        return mid - half_width, mid + half_width
    return lo, hi


def merge_intervals(spans: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    """Union of closed intervals as a sorted list of disjoint intervals."""
    merged: list[list[float]] = []
    for lo, hi in sorted(spans):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(lo, hi) for lo, hi in merged]


@dataclass(frozen=True, eq=False)
class Miud:
    """
    Uniform density over a union of disjoint intervals.

    Parameters
    ----------
    sat_id : str
        Satellite the intervals belong to.
    intervals : tuple of (lo, hi)
        Merged, sorted, disjoint support.
    density : float
        1 / total support length.
    source_intervals : tuple of RangeOffsetInterval
        Unmerged per-mode intervals the support was built from.
    """

    sat_id: str
    intervals: tuple[tuple[float, float], ...]
    density: float
    source_intervals: tuple[RangeOffsetInterval, ...] = field(default=(), repr=False)

    @property
    def length(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    @cached_property
    def _bounds(self) -> np.ndarray:
        return np.asarray(self.intervals, dtype=float).reshape(-1, 2)

    def pdf(self, x: ArrayLike) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        b = self._bounds
        inside = ((xs[..., None] >= b[:, 0]) & (xs[..., None] <= b[:, 1])).any(axis=-1)
        return np.where(inside, self.density, 0.0)

    def integral(self) -> float:
        return self.density * self.length


def build_miud(
    intervals: Sequence[RangeOffsetInterval],
    half_width: float = config.MIUD_HALF_WIDTH,
) -> Miud:
    """
    MIUD of one satellite from its per-mode intervals.

    Parameters
    ----------
    intervals : sequence of RangeOffsetInterval
        One interval per mode, all for the same satellite.
    half_width : float
        Zero-width inflation half-width.

    Returns
    -------
    Miud
    """
    if not intervals:
        raise ValueError("build_miud needs at least one interval")
    sat_ids = {iv.sat_id for iv in intervals}
    if len(sat_ids) != 1:
        raise ValueError(f"intervals belong to several satellites: {sorted(sat_ids)}")
    spans = [inflate(iv.lo, iv.hi, half_width) for iv in intervals]
    merged = merge_intervals(spans)
    total = sum(hi - lo for lo, hi in merged)
    return Miud(
        sat_id=intervals[0].sat_id,
        intervals=tuple(merged),
        density=1.0 / total,
        source_intervals=tuple(intervals),
    )


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """Equal-weight mixture of per-satellite MIUDs."""

    miuds: tuple[Miud, ...]

    def __post_init__(self) -> None:
        if not self.miuds:
            raise ValueError("mixture needs at least one MIUD")
        object.__setattr__(self, "miuds", tuple(self.miuds))

    @property
    def n_satellites(self) -> int:
        return len(self.miuds)

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n_satellites, 1.0 / self.n_satellites)

    @property
    def sat_ids(self) -> list[str]:
        return [m.sat_id for m in self.miuds]

    @property
    def intervals(self) -> list[list[RangeOffsetInterval]]:
        """Unmerged per-mode intervals, ``intervals[s][m]``."""
        return [list(m.source_intervals) for m in self.miuds]

    def pdf(self, x: ArrayLike) -> np.ndarray:
        return sum(w * m.pdf(x) for w, m in zip(self.weights, self.miuds))

    def integral(self) -> float:
        return float(sum(w * m.integral() for w, m in zip(self.weights, self.miuds)))

    def support(self) -> list[tuple[float, float]]:
        return merge_intervals([iv for m in self.miuds for iv in m.intervals])


def build_mixture(miuds: Sequence[Miud]) -> MixtureModel:
    return MixtureModel(tuple(miuds))


def mixture_from_intervals(
    intervals: Sequence[Sequence[RangeOffsetInterval]],
    half_width: float = config.MIUD_HALF_WIDTH,
) -> MixtureModel:
    """Mixture from per-satellite rows of per-mode intervals."""
    return build_mixture([build_miud(row, half_width) for row in intervals])


def build_spc_mixture(
    epoch: Epoch,
    mode_set: ModeSet,
    anchor: tuple[float, float],
    half_width: float = config.MIUD_HALF_WIDTH,
) -> MixtureModel:
    """Planes from the epoch's pseudoranges, projected over every mode."""
    planes = build_planes(epoch, anchor, mode_set.receiver_plane_z)
    return mixture_from_intervals(project_modes(planes, mode_set), half_width)
