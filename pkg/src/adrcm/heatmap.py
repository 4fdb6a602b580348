"""Raw binning of neighborhood samples over (position, age), dimension one.

Counts stay exact integers here; any smoothing belongs to the rendering side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .palm import NeighborhoodSample

__all__ = ["HeatmapGrid", "heatmap_accumulate"]


@dataclass
class HeatmapGrid:
    """2D histogram of neighbor points: x-axis position, y-axis age."""

    x_edges: np.ndarray  # (nx + 1,)
    s_edges: np.ndarray  # (ns + 1,)
    counts: np.ndarray  # (nx, ns) integer counts
    n_samples: int  # number of neighborhoods accumulated
    n_points: int  # number of binned neighbor points

    @property
    def nx(self) -> int:
        return len(self.x_edges) - 1

    @property
    def ns(self) -> int:
        return len(self.s_edges) - 1


def _gather(samples: list[NeighborhoodSample]):
    xs, ages = [], []
    for sample in samples:
        for side in (sample.older, sample.younger):
            if len(side):
                xs.append(side.positions[:, 0])
                ages.append(side.ages)
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ages)


def heatmap_accumulate(
    samples: list[NeighborhoodSample],
    nx: int = 120,
    ns: int = 80,
    x_range: tuple[float, float] | None = None,
    s_range: tuple[float, float] | None = None,
) -> HeatmapGrid:
    """Bin every neighbor point of every sample into an (nx, ns) grid.

    Extents default to the sampled point cloud itself so the counts always sum
    to the number of binned points; explicit extents must cover the cloud.
    """
    if samples and samples[0].older.positions.shape[1] != 1:
        raise ValueError("heatmaps are defined for dimension 1")
    xs, ages = _gather(samples)
    if len(xs) == 0:
        x_range = x_range or (-1.0, 1.0)
        s_range = s_range or (0.0, 1.0)
        return HeatmapGrid(
            x_edges=np.linspace(*x_range, nx + 1),
            s_edges=np.linspace(*s_range, ns + 1),
            counts=np.zeros((nx, ns), dtype=np.int64),
            n_samples=len(samples),
            n_points=0,
        )
    if x_range is None:
        span = float(np.max(np.abs(xs))) or 1.0
        x_range = (-span, span)
    if s_range is None:
        s_range = (0.0, 1.0)
    if np.min(xs) < x_range[0] or np.max(xs) > x_range[1]:
        raise ValueError("explicit x_range does not cover the sampled points")
    counts, x_edges, s_edges = np.histogram2d(
        xs, ages, bins=(nx, ns), range=(x_range, s_range)
    )
    return HeatmapGrid(
        x_edges=x_edges,
        s_edges=s_edges,
        counts=counts.astype(np.int64),
        n_samples=len(samples),
        n_points=len(xs),
    )
