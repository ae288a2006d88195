"""On-manifold dataset generators, ground-truth distances, and metrics.

Generation samples uniformly inside task bounds and projects onto the
analytic constraint, standing in for a simulator-driven pipeline.  The
ground-truth distance of each kind is geometric, which keeps the quality
metrics independent of any learned representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .collision import Box
from .kinematics import SerialChain, fk_frame, upright_constraint
from .manifolds import (
    Manifold,
    ProjectionSettings,
    axis_plane,
    finite_difference_jacobian,
    intersect,
    project_batch,
    sphere,
)

__all__ = [
    "DatasetSpec",
    "generate",
    "ground_truth_manifold",
    "ground_truth_distance",
    "sampling_bounds",
    "metric_mu",
    "metric_P",
    "plane_arm_chain",
    "orient_arm_chain",
]

KINDS = ("sphere", "circle3d", "plane_arm", "orient_arm")

PLANE_ARM_OFFSET = 0.5


@dataclass(frozen=True)
class DatasetSpec:
    kind: str
    n: int
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}; choose from {KINDS}")
        if self.n <= 0:
            raise ValueError("dataset size must be positive")
        if self.noise < 0:
            raise ValueError("noise sigma must be non-negative")


def plane_arm_chain() -> SerialChain:
    """3-DoF arm (yaw, pitch, pitch), unit links along x."""
    return SerialChain(
        axes=[[0, 0, 1], [0, 1, 0], [0, 1, 0]],
        offsets=[[1, 0, 0], [1, 0, 0], [1, 0, 0]],
    )


def orient_arm_chain() -> SerialChain:
    """6-DoF arm with alternating yaw/pitch joints, unit links along x."""
    return SerialChain(
        axes=[[0, 0, 1], [0, 1, 0], [0, 1, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
        offsets=[[1, 0, 0]] * 6,
    )


def _plane_arm_manifold() -> Manifold:
    chain = plane_arm_chain()

    def fn(Q):
        p, _ = fk_frame(chain, Q)
        return (p[:, 2] - PLANE_ARM_OFFSET)[:, None]

    return Manifold(3, 1, fn, lambda Q: finite_difference_jacobian(fn, Q), name="plane_arm")


def ground_truth_manifold(kind: str) -> Manifold:
    if kind == "sphere":
        return sphere()
    if kind == "circle3d":
        return intersect(sphere(), axis_plane(axis=2, offset=0.0))
    if kind == "plane_arm":
        return _plane_arm_manifold()
    if kind == "orient_arm":
        return upright_constraint(orient_arm_chain())
    raise ValueError(f"unknown dataset kind {kind!r}")


def sampling_bounds(kind: str) -> Box:
    if kind in ("sphere", "circle3d"):
        return Box(low=-2.0 * np.ones(3), high=2.0 * np.ones(3))
    if kind == "plane_arm":
        return Box(low=-np.pi * np.ones(3), high=np.pi * np.ones(3))
    if kind == "orient_arm":
        return Box(low=-np.pi * np.ones(6), high=np.pi * np.ones(6))
    raise ValueError(f"unknown dataset kind {kind!r}")


def generate(spec: DatasetSpec) -> np.ndarray:
    """On-manifold samples (exact to 1e-9 before noise), noise added after."""
    rng = np.random.default_rng(spec.seed)
    manifold = ground_truth_manifold(spec.kind)
    bounds = sampling_bounds(spec.kind)
    settings = ProjectionSettings(tolerance=1e-12, max_iterations=200)
    out: list[np.ndarray] = []
    total = 0
    for _ in range(50):
        need = spec.n - total
        if need <= 0:
            break
        raw = rng.uniform(bounds.low, bounds.high, size=(max(need, 16), bounds.low.size))
        projected, ok = project_batch(raw, manifold, settings)
        kept = projected[ok][:need]
        out.append(kept)
        total += len(kept)
    if total < spec.n:
        raise RuntimeError(f"projection sampling stalled at {total}/{spec.n} points")
    data = np.concatenate(out)[: spec.n]
    if spec.noise > 0:
        data = data + rng.normal(0.0, spec.noise, size=data.shape)
    return data


def ground_truth_distance(kind: str, points: np.ndarray) -> np.ndarray:
    """Geometric distance to the true manifold, per point."""
    Q = np.atleast_2d(np.asarray(points, dtype=float))
    if kind == "sphere":
        return np.abs(np.linalg.norm(Q, axis=1) - 1.0)
    if kind == "circle3d":
        rad = np.linalg.norm(Q[:, :2], axis=1)
        return np.sqrt((rad - 1.0) ** 2 + Q[:, 2] ** 2)
    if kind == "plane_arm":
        p, _ = fk_frame(plane_arm_chain(), Q)
        return np.abs(p[:, 2] - PLANE_ARM_OFFSET)
    if kind == "orient_arm":
        _, R = fk_frame(orient_arm_chain(), Q)
        return np.abs(R[:, 2, 2] - 1.0)
    raise ValueError(f"unknown dataset kind {kind!r}")


def metric_mu(points: np.ndarray, kind: str) -> tuple[float, float]:
    """Mean and std of the ground-truth distance."""
    P = np.atleast_2d(points)
    if len(P) == 0:
        raise ValueError("empty point set")
    d = ground_truth_distance(kind, P)
    return float(np.mean(d)), float(np.std(d))


def metric_P(points: np.ndarray, kind: str, threshold: float = 0.1) -> float:
    """Percentage of points within the distance threshold of the manifold."""
    P = np.atleast_2d(points)
    if len(P) == 0:
        raise ValueError("empty point set")
    d = ground_truth_distance(kind, P)
    return float(100.0 * np.mean(d <= threshold))
