"""Canonical benchmark tasks used by the experiment scripts and the tests."""

from __future__ import annotations

import numpy as np

from .collision import Box, FreeSpace
from .manifolds import axis_plane, cylinder, paraboloid, point_goal
from .planner import SequencedTask

__all__ = ["point_task", "intersection_boxes", "plane_goal_task"]


def point_task(obstacles=(), hooks=None) -> SequencedTask:
    """3D point benchmark: paraboloid -> cylinder -> paraboloid -> point goal."""
    manifolds = (
        paraboloid((0.1, 0.1), 2.0),
        cylinder(radius=2.0, coeff=0.25),
        paraboloid((-0.1, -0.1), -2.0),
        point_goal(np.array([-3.5, -3.5, -4.45])),
    )
    bounds = Box(low=-6.0 * np.ones(3), high=6.0 * np.ones(3))
    return SequencedTask(
        manifolds=manifolds,
        start=np.array([3.5, 3.5, 4.45]),
        free=FreeSpace(bounds=bounds, obstacles=tuple(obstacles)),
        hooks=hooks,
    )


def intersection_boxes(half: float = 1.5) -> list[Box]:
    """Four box obstacles sitting on the two manifold-intersection circles,
    blocking the azimuth the unconstrained optimum passes through."""
    c = 2.0 * np.cos(np.pi / 4)
    return [
        Box(low=np.array([s * c, s * c, z]) - half, high=np.array([s * c, s * c, z]) + half)
        for z in (2.4, -2.4)
        for s in (1.0, -1.0)
    ]


def plane_goal_task(goal=(2.0, 2.0, 0.0), start=(-2.0, -2.0, 0.0)) -> SequencedTask:
    """Single-stage task: move on the z=0 plane to a point goal."""
    bounds = Box(low=-4.0 * np.ones(3), high=4.0 * np.ones(3))
    return SequencedTask(
        manifolds=(axis_plane(2, 0.0), point_goal(np.asarray(goal, dtype=float))),
        start=np.asarray(start, dtype=float),
        free=FreeSpace(bounds=bounds),
    )
