"""Torus and Euclidean geometry: distances, placement, space-time rescaling.

Coordinates live on the cubic torus of a chosen volume (side length
``volume**(1/d)``), stored in the fundamental domain ``(-side/2, side/2]^d``.
An infinite volume switches every operation to plain Euclidean space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Space",
    "Vertex",
    "wrap_position",
    "torus_distance",
    "torus_distances",
    "rescale_vertex",
]


@dataclass(frozen=True)
class Space:
    """A cubic torus of given volume in dimension ``d``; ``math.inf`` means R^d."""

    d: int
    volume: float = 1.0

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d}")
        if not self.volume > 0:
            raise ValueError(f"volume must be positive, got {self.volume}")

    @property
    def is_torus(self) -> bool:
        return math.isfinite(self.volume)

    @property
    def side(self) -> float:
        """Side length of the torus, infinite for free space."""
        if not self.is_torus:
            return math.inf
        return self.volume ** (1.0 / self.d)

    def contains(self, position: np.ndarray) -> bool:
        p = np.asarray(position, dtype=float)
        if p.shape != (self.d,):
            return False
        if not self.is_torus:
            return bool(np.all(np.isfinite(p)))
        half = 0.5 * self.side
        return bool(np.all(p > -half) and np.all(p <= half))


@dataclass(frozen=True, eq=False)
class Vertex:
    """A marked point: spatial position plus birth time."""

    position: np.ndarray
    birth_time: float
    id: int = -1

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if not self.birth_time > 0:
            raise ValueError(f"birth time must be positive, got {self.birth_time}")


def wrap_position(position: np.ndarray, space: Space) -> np.ndarray:
    """Map coordinates into the fundamental domain ``(-side/2, side/2]``."""
    p = np.asarray(position, dtype=float)
    if not space.is_torus:
        return p
    side = space.side
    r = np.remainder(p, side)  # in [0, side)
    return np.where(r > 0.5 * side, r - side, r)


def _check_dims(p: np.ndarray, q: np.ndarray, space: Space) -> None:
    if p.shape[-1] != space.d or q.shape[-1] != space.d:
        raise ValueError(
            f"dimension mismatch: points with {p.shape[-1]} and {q.shape[-1]} "
            f"coordinates in a {space.d}-dimensional space"
        )


def torus_distance(p: np.ndarray, q: np.ndarray, space: Space) -> float:
    """Minimum over periodic shifts of the Euclidean distance (Euclidean if free).

    On the torus every component difference is wrapped to ``[-side/2, side/2]``
    before taking the norm, which realizes the minimum over all lattice shifts.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    _check_dims(p, q, space)
    delta = p - q
    if space.is_torus:
        side = space.side
        delta = delta - side * np.round(delta / side)
    return float(np.sqrt(np.sum(delta * delta)))


def torus_distances(p: np.ndarray, qs: np.ndarray, space: Space) -> np.ndarray:
    """Distances from one point to many (rows of ``qs``)."""
    p = np.asarray(p, dtype=float).reshape(-1)
    qs = np.asarray(qs, dtype=float).reshape(-1, p.shape[0])
    _check_dims(p, qs, space)
    delta = qs - p
    if space.is_torus:
        side = space.side
        delta = delta - side * np.round(delta / side)
    return np.sqrt(np.sum(delta * delta, axis=1))


def rescale_vertex(v: Vertex, t: float, space_in: Space) -> Vertex:
    """Expand space by ``t**(1/d)`` and shrink time by ``1/t``.

    Maps a vertex on the unit-volume torus born by time ``t`` to the torus of
    volume ``t`` with birth time in ``(0, 1]``.
    """
    if space_in.volume != 1.0:
        raise ValueError("rescaling is defined on the unit-volume torus")
    if v.birth_time > t:
        raise ValueError(f"vertex born at {v.birth_time} after horizon {t}")
    factor = t ** (1.0 / space_in.d)
    return Vertex(position=v.position * factor, birth_time=v.birth_time / t, id=v.id)
