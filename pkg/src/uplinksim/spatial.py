"""Stochastic geometry of the UE layout.

One realization consists of K intra-cell UEs drawn uniformly on the cell
disk plus K mutually independent homogeneous Poisson point processes of
pilot-reusing UEs on the annulus between the cell edge and the truncated
simulation window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .config import SystemConfig, validate

TIER_INTRA = "intra"
TIER_OUTER = "outer"


@dataclass(frozen=True)
class UePoint:
    """A single UE: planar position, assigned pilot (1-based) and tier."""

    position: tuple[float, float]
    pilot_index: int
    tier: str


@dataclass(frozen=True)
class PointLayout:
    """One spatial realization.

    ``intra`` holds the K in-cell UE positions as a (K, 2) array; row k-1
    is the UE on pilot k.  ``outer[k-1]`` is the (N_k, 2) array of UEs that
    reuse pilot k outside the cell, within the truncated window.
    """

    intra: np.ndarray
    outer: list[np.ndarray]
    cell_radius: float
    window_outer_radius: float

    @property
    def n_pilots(self) -> int:
        return self.intra.shape[0]

    def outer_counts(self) -> np.ndarray:
        return np.array([len(g) for g in self.outer])

    def iter_points(self) -> Iterator[UePoint]:
        for k in range(self.n_pilots):
            x, y = self.intra[k]
            yield UePoint((float(x), float(y)), k + 1, TIER_INTRA)
        for k, group in enumerate(self.outer):
            for x, y in group:
                yield UePoint((float(x), float(y)), k + 1, TIER_OUTER)


def _polar_to_xy(radii: np.ndarray, angles: np.ndarray) -> np.ndarray:
    return np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))


def sample_intra(count: int, radius: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` points i.i.d. uniform on the disk of given radius.

    Uses the polar inverse CDF: r = radius * sqrt(u).
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    radii = radius * np.sqrt(rng.random(count))
    angles = rng.random(count) * (2.0 * np.pi)
    return _polar_to_xy(radii, angles)


def sample_ppp_annulus(intensity: float, inner: float, outer: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Draw one homogeneous PPP realization on the annulus (inner, outer].

    The point count is Poisson with mean intensity*pi*(outer^2 - inner^2);
    given the count, points are i.i.d. uniform on the annulus (inverse CDF
    on r^2).
    """
    if not (outer > inner > 0):
        raise ValueError("need outer > inner > 0")
    if intensity <= 0:
        raise ValueError("intensity must be positive")
    mean_count = intensity * np.pi * (outer**2 - inner**2)
    n = rng.poisson(mean_count)
    r_sq = inner**2 + rng.random(n) * (outer**2 - inner**2)
    angles = rng.random(n) * (2.0 * np.pi)
    return _polar_to_xy(np.sqrt(r_sq), angles)


def sample_layout(config: SystemConfig,
                  rng: np.random.Generator) -> PointLayout:
    """Draw one full layout for a validated config.

    The intra-cell UEs and each pilot-reuse group are sampled from
    independent child streams spawned from ``rng``, so a layout is
    reproducible regardless of how trials are scheduled across workers.
    """
    derived = validate(config)
    window = config.trunc_factor * config.R
    streams = rng.spawn(config.K + 1)
    intra = sample_intra(config.K, config.R, streams[0])
    outer = [
        sample_ppp_annulus(derived.lam, config.R, window, streams[k + 1])
        for k in range(config.K)
    ]
    return PointLayout(intra=intra, outer=outer, cell_radius=config.R,
                       window_outer_radius=window)
