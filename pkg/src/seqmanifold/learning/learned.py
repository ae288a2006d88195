"""Bridging trained networks into the planner's manifold interface."""

from __future__ import annotations

import numpy as np

from ..manifolds import Manifold, ProjectionSettings, project
from .mlp import MlpModel

__all__ = ["learned_manifold", "project_learned"]


def learned_manifold(model: MlpModel, name: str = "learned") -> Manifold:
    """Wrap a trained network as a constraint manifold.

    The result is interchangeable with analytic manifolds: it can be
    stacked, projected onto, and planned over.
    """
    return Manifold(
        ambient_dim=model.input_dim,
        constraint_dim=model.output_dim,
        fn=lambda Q: np.atleast_2d(model.forward(Q)),
        jac=lambda Q: model.jacobian(np.atleast_2d(Q)),
        name=name,
    )


def project_learned(
    model: MlpModel,
    q: np.ndarray,
    settings: ProjectionSettings = ProjectionSettings(tolerance=1e-4),
) -> np.ndarray | None:
    """Drive a configuration onto the learned zero set; None on failure."""
    return project(q, learned_manifold(model), settings)
