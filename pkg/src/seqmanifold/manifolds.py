"""Implicit equality-constraint manifolds and projection onto them.

A manifold is the zero set of a smooth map h: R^k -> R^l.  All evaluators
are batched: they accept arrays of shape (B, k) and return (B, l) values
and (B, l, k) Jacobians.  The public helpers `evaluate` / `jacobian` also
accept a single configuration of shape (k,).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Manifold",
    "ProjectionSettings",
    "evaluate",
    "jacobian",
    "intersect",
    "project",
    "project_batch",
    "tangent_basis",
    "finite_difference_jacobian",
    "sphere",
    "paraboloid",
    "cylinder",
    "axis_plane",
    "point_goal",
]


@dataclass(frozen=True)
class Manifold:
    """Equality constraint h(q) = 0 with Jacobian access.

    `fn` maps (B, k) -> (B, l); `jac` maps (B, k) -> (B, l, k).  When no
    analytic Jacobian is available, `jac` falls back to central finite
    differences of `fn`.
    """

    ambient_dim: int
    constraint_dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "manifold"

    def __post_init__(self):
        # stacked intersections may exceed the ambient dimension, so only
        # positivity is enforced here
        if self.constraint_dim < 1:
            raise ValueError(f"constraint_dim must be positive, got {self.constraint_dim}")

    def jacobian_fn(self) -> Callable[[np.ndarray], np.ndarray]:
        if self.jac is not None:
            return self.jac
        return lambda Q: finite_difference_jacobian(self.fn, Q)


@dataclass(frozen=True)
class ProjectionSettings:
    """Newton projection parameters."""

    tolerance: float = 1e-5
    max_iterations: int = 100
    singular_value_cutoff: float = 1e-10
    max_step_halvings: int = 10

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def _as_batch(q: np.ndarray, k: int) -> tuple[np.ndarray, bool]:
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    if single:
        q = q[None, :]
    if q.shape[-1] != k:
        raise ValueError(f"configuration has dimension {q.shape[-1]}, expected {k}")
    return q, single


def evaluate(manifold: Manifold, q: np.ndarray) -> np.ndarray:
    """Constraint value h(q); zero iff q lies on the manifold."""
    Q, single = _as_batch(q, manifold.ambient_dim)
    h = manifold.fn(Q)
    return h[0] if single else h


def jacobian(manifold: Manifold, q: np.ndarray) -> np.ndarray:
    """Constraint Jacobian dh/dq, shape (l, k) for a single configuration."""
    Q, single = _as_batch(q, manifold.ambient_dim)
    J = manifold.jacobian_fn()(Q)
    return J[0] if single else J


def finite_difference_jacobian(
    fn: Callable[[np.ndarray], np.ndarray], Q: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    """Central-difference Jacobian of a batched map, shape (B, l, k)."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    B, k = Q.shape
    cols = []
    for i in range(k):
        delta = np.zeros(k)
        delta[i] = step
        cols.append((fn(Q + delta) - fn(Q - delta)) / (2.0 * step))
    return np.stack(cols, axis=-1)


def intersect(m_a: Manifold, m_b: Manifold) -> Manifold:
    """Manifold for the intersection, obtained by stacking constraints."""
    if m_a.ambient_dim != m_b.ambient_dim:
        raise ValueError(
            f"ambient dimensions differ: {m_a.ambient_dim} vs {m_b.ambient_dim}"
        )
    ja, jb = m_a.jacobian_fn(), m_b.jacobian_fn()

    def fn(Q):
        return np.concatenate([m_a.fn(Q), m_b.fn(Q)], axis=-1)

    def jac(Q):
        return np.concatenate([ja(Q), jb(Q)], axis=-2)

    return Manifold(
        ambient_dim=m_a.ambient_dim,
        constraint_dim=m_a.constraint_dim + m_b.constraint_dim,
        fn=fn,
        jac=jac,
        name=f"{m_a.name}&{m_b.name}",
    )


def tangent_basis(J: np.ndarray, cutoff: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the null space of a single Jacobian (k, k-rank)."""
    J = np.atleast_2d(J)
    u, s, vt = np.linalg.svd(J)
    if s.size == 0 or s[0] <= 0.0:
        rank = 0
    else:
        rank = int(np.sum(s > cutoff * s[0]))
    return vt[rank:].T


def project_batch(
    starts: np.ndarray,
    manifold: Manifold,
    settings: ProjectionSettings = ProjectionSettings(),
) -> tuple[np.ndarray, np.ndarray]:
    """Project a batch of points onto the manifold.

    Damped Newton iteration q <- q - pinv(J) h, halving the step while it
    would increase ||h||.  Returns (points, converged) where non-converged
    rows hold the last iterate and must not be treated as valid.
    """
    Q = np.atleast_2d(np.asarray(starts, dtype=float)).copy()
    if Q.shape[1] != manifold.ambient_dim:
        raise ValueError(
            f"configuration has dimension {Q.shape[1]}, expected {manifold.ambient_dim}"
        )
    jac_fn = manifold.jacobian_fn()
    h = manifold.fn(Q)
    hn = np.linalg.norm(h, axis=-1)
    alive = hn > settings.tolerance

    for _ in range(settings.max_iterations):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        Qa, ha, hna = Q[idx], h[idx], hn[idx]
        J = jac_fn(Qa)
        step = np.einsum(
            "bkl,bl->bk", np.linalg.pinv(J, rcond=settings.singular_value_cutoff), ha
        )
        stalled = np.linalg.norm(step, axis=-1) <= 1e-14
        scale = np.ones(len(idx))
        cand = Qa - step
        hc = manifold.fn(cand)
        hnc = np.linalg.norm(hc, axis=-1)
        for _ in range(settings.max_step_halvings):
            worse = (hnc > hna) & ~stalled
            if not worse.any():
                break
            scale[worse] *= 0.5
            cand[worse] = Qa[worse] - scale[worse, None] * step[worse]
            hc[worse] = manifold.fn(cand[worse])
            hnc[worse] = np.linalg.norm(hc[worse], axis=-1)
        accepted = (hnc <= hna) & ~stalled
        Q[idx[accepted]] = cand[accepted]
        h[idx[accepted]] = hc[accepted]
        hn[idx[accepted]] = hnc[accepted]
        # points that could not decrease ||h|| are stuck; drop them now
        alive[idx[~accepted]] = False
        alive[idx] &= hn[idx] > settings.tolerance

    return Q, hn <= settings.tolerance


def project(
    q: np.ndarray,
    manifold: Manifold,
    settings: ProjectionSettings = ProjectionSettings(),
) -> np.ndarray | None:
    """Project a single configuration; returns None when Newton fails."""
    Q, ok = project_batch(np.asarray(q, dtype=float)[None, :], manifold, settings)
    return Q[0] if ok[0] else None


# ---------------------------------------------------------------------------
# Analytic constraint library
# ---------------------------------------------------------------------------


def sphere(radius: float = 1.0, center=None, dim: int = 3) -> Manifold:
    """h(q) = ||q - center|| - radius."""
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def fn(Q):
        return np.linalg.norm(Q - c, axis=-1, keepdims=True) - radius

    def jac(Q):
        d = Q - c
        n = np.linalg.norm(d, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = np.where(n > 0, d / n, 0.0)
        return g[:, None, :]

    return Manifold(dim, 1, fn, jac, name="sphere")


def paraboloid(coeffs=(0.1, 0.1), offset: float = 2.0) -> Manifold:
    """h(q) = c1*q1^2 + c2*q2^2 + offset - q3 over R^3."""
    c1, c2 = float(coeffs[0]), float(coeffs[1])

    def fn(Q):
        return (c1 * Q[:, 0] ** 2 + c2 * Q[:, 1] ** 2 + offset - Q[:, 2])[:, None]

    def jac(Q):
        J = np.empty((len(Q), 1, 3))
        J[:, 0, 0] = 2.0 * c1 * Q[:, 0]
        J[:, 0, 1] = 2.0 * c2 * Q[:, 1]
        J[:, 0, 2] = -1.0
        return J

    return Manifold(3, 1, fn, jac, name="paraboloid")


def cylinder(radius: float = 1.0, coeff: float = 1.0, center=(0.0, 0.0)) -> Manifold:
    """h(q) = coeff*((q1-cx)^2 + (q2-cy)^2 - radius^2) over R^3."""
    cx, cy = float(center[0]), float(center[1])

    def fn(Q):
        return (coeff * ((Q[:, 0] - cx) ** 2 + (Q[:, 1] - cy) ** 2 - radius**2))[
            :, None
        ]

    def jac(Q):
        J = np.zeros((len(Q), 1, 3))
        J[:, 0, 0] = 2.0 * coeff * (Q[:, 0] - cx)
        J[:, 0, 1] = 2.0 * coeff * (Q[:, 1] - cy)
        return J

    return Manifold(3, 1, fn, jac, name="cylinder")


def axis_plane(axis: int, offset: float = 0.0, dim: int = 3) -> Manifold:
    """h(q) = q[axis] - offset."""
    if not 0 <= axis < dim:
        raise ValueError(f"axis {axis} out of range for dimension {dim}")

    def fn(Q):
        return (Q[:, axis] - offset)[:, None]

    def jac(Q):
        J = np.zeros((len(Q), 1, dim))
        J[:, 0, axis] = 1.0
        return J

    return Manifold(dim, 1, fn, jac, name="plane")


def point_goal(target) -> Manifold:
    """h(q) = q - target; the zero set is a single configuration."""
    t = np.asarray(target, dtype=float)
    k = t.shape[0]

    def fn(Q):
        return Q - t

    def jac(Q):
        return np.broadcast_to(np.eye(k), (len(Q), k, k)).copy()

    return Manifold(k, k, fn, jac, name="goal")
