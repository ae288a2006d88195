"""Axis-aligned boxes, free-space bookkeeping, and segment collision checks."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = ["Box", "FreeSpace", "collision_free", "identity_hook", "add_obstacle_hook"]


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box [low, high]; points on a face are inside."""

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        low = np.asarray(self.low, dtype=float)
        high = np.asarray(self.high, dtype=float)
        if low.shape != high.shape or np.any(high < low):
            raise ValueError("box needs low <= high componentwise")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    def contains(self, points: np.ndarray) -> np.ndarray:
        P = np.atleast_2d(points)
        return np.all((P >= self.low) & (P <= self.high), axis=-1)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.high - self.low))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high)


@dataclass(frozen=True)
class FreeSpace:
    """Bounds plus obstacle set; transitions may replace it wholesale."""

    bounds: Box
    obstacles: tuple[Box, ...] = field(default_factory=tuple)
    resolution: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if self.resolution <= 0:
            raise ValueError("collision resolution must be positive")

    def with_obstacles(self, obstacles) -> "FreeSpace":
        return replace(self, obstacles=tuple(obstacles))


def collision_free(q_a: np.ndarray, q_b: np.ndarray, free: FreeSpace) -> bool:
    """True iff the straight segment stays in bounds and hits no obstacle.

    The segment is sampled at the free-space resolution; obstacle boxes are
    closed, so grazing a face counts as a collision.
    """
    a = np.asarray(q_a, dtype=float)
    b = np.asarray(q_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("segment endpoints must share a dimension")
    dist = float(np.linalg.norm(b - a))
    if not free.obstacles:
        # bounds are convex: the segment lies inside iff both endpoints do
        return bool(free.bounds.contains(a[None])[0] and free.bounds.contains(b[None])[0])
    n = max(2, int(np.ceil(dist / free.resolution)) + 1)
    t = np.linspace(0.0, 1.0, n)
    points = a[None, :] + t[:, None] * (b - a)[None, :]
    if not free.bounds.contains(points).all():
        return False
    for box in free.obstacles:
        if box.contains(points).any():
            return False
    return True


def segment_points(q_a: np.ndarray, q_b: np.ndarray, resolution: float) -> np.ndarray:
    a = np.asarray(q_a, dtype=float)
    b = np.asarray(q_b, dtype=float)
    n = max(2, int(np.ceil(np.linalg.norm(b - a) / resolution)) + 1)
    t = np.linspace(0.0, 1.0, n)
    return a[None, :] + t[:, None] * (b - a)[None, :]


def identity_hook(free: FreeSpace, q_transition: np.ndarray) -> FreeSpace:
    """Transition that leaves the free space unchanged."""
    return free


def add_obstacle_hook(box: Box):
    """Transition that adds a fixed obstacle, e.g. geometry attached on pickup.

    The added box does not depend on the transition configuration, so any
    two transition points produce set-equivalent free spaces.
    """

    def hook(free: FreeSpace, q_transition: np.ndarray) -> FreeSpace:
        return free.with_obstacles(free.obstacles + (box,))

    return hook
