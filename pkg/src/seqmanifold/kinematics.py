"""Minimal serial-chain forward kinematics for revolute arms.

Joint i rotates about a fixed axis; link i then offsets the frame.  This is
enough to express task-space constraints (reach a point, meet another arm,
keep the tool upright) over joint space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .manifolds import Manifold, finite_difference_jacobian

__all__ = [
    "SerialChain",
    "fk_position",
    "fk_frame",
    "fk_align_z",
    "grasp_constraint",
    "handover_constraint",
    "upright_constraint",
]


def _axis_angle_matrices(axis: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Rodrigues rotation matrices for one axis and a batch of angles."""
    x, y, z = axis
    K = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    c = np.cos(angles)[:, None, None]
    s = np.sin(angles)[:, None, None]
    eye = np.eye(3)
    return eye + s * K + (1.0 - c) * (K @ K)


@dataclass(frozen=True)
class SerialChain:
    """Revolute serial chain: per-joint rotation axis and link offset (meters)."""

    axes: np.ndarray
    offsets: np.ndarray
    base_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    base_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        axes = np.atleast_2d(np.asarray(self.axes, dtype=float))
        offsets = np.atleast_2d(np.asarray(self.offsets, dtype=float))
        if len(axes) < 1:
            raise ValueError("chain needs at least one link")
        if axes.shape != offsets.shape or axes.shape[1] != 3:
            raise ValueError("axes and offsets must both have shape (n_links, 3)")
        norms = np.linalg.norm(axes, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("rotation axes must be unit-norm")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "base_position", np.asarray(self.base_position, dtype=float))
        object.__setattr__(self, "base_rotation", np.asarray(self.base_rotation, dtype=float))

    @property
    def dof(self) -> int:
        return len(self.axes)


def fk_frame(chain: SerialChain, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """End-effector position (B, 3) and orientation (B, 3, 3) for joints (B, n)."""
    Q = np.atleast_2d(np.asarray(q, dtype=float))
    if Q.shape[1] != chain.dof:
        raise ValueError(f"expected {chain.dof} joint values, got {Q.shape[1]}")
    B = len(Q)
    R = np.broadcast_to(chain.base_rotation, (B, 3, 3)).copy()
    p = np.broadcast_to(chain.base_position, (B, 3)).copy()
    for i in range(chain.dof):
        R = R @ _axis_angle_matrices(chain.axes[i], Q[:, i])
        p = p + np.einsum("bij,j->bi", R, chain.offsets[i])
    return p, R


def fk_position(chain: SerialChain, q: np.ndarray) -> np.ndarray:
    """End-effector position; (3,) for a single configuration."""
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    p, _ = fk_frame(chain, q)
    return p[0] if single else p


def fk_align_z(chain: SerialChain, q: np.ndarray) -> np.ndarray | float:
    """Alignment of the tool z axis with world up: R[2, 2] - 1, in [-2, 0]."""
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    _, R = fk_frame(chain, q)
    val = R[:, 2, 2] - 1.0
    return float(val[0]) if single else val


def grasp_constraint(chain: SerialChain, target) -> Manifold:
    """Reach a fixed point: h(q) = target - fk_position(q), l = 3."""
    t = np.asarray(target, dtype=float)

    def fn(Q):
        p, _ = fk_frame(chain, Q)
        return t - p

    return Manifold(
        chain.dof, 3, fn, lambda Q: finite_difference_jacobian(fn, Q), name="grasp"
    )


def handover_constraint(chain_a: SerialChain, chain_b: SerialChain) -> Manifold:
    """Two end effectors meet: h(q) = fk_a(q) - fk_b(q), l = 3.

    Both chains consume the full joint vector, so they must share the DOF
    count; disjoint-joint systems can wrap a chain to slice its joints.
    """
    if chain_a.dof != chain_b.dof:
        raise ValueError("handover chains must share the configuration dimension")

    def fn(Q):
        pa, _ = fk_frame(chain_a, Q)
        pb, _ = fk_frame(chain_b, Q)
        return pa - pb

    return Manifold(
        chain_a.dof, 3, fn, lambda Q: finite_difference_jacobian(fn, Q), name="handover"
    )


def upright_constraint(chain: SerialChain) -> Manifold:
    """Tool z stays vertical: h(q) = R_z(q)^T e_z - 1, l = 1."""

    def fn(Q):
        _, R = fk_frame(chain, Q)
        return (R[:, 2, 2] - 1.0)[:, None]

    return Manifold(
        chain.dof, 1, fn, lambda Q: finite_difference_jacobian(fn, Q), name="upright"
    )
