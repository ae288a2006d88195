"""Off-manifold data augmentation along estimated normal directions.

Each on-manifold point spawns points at increasing offsets along a random
unit vector of its (aligned) normal space, labeled by the offset norm.  A
candidate whose nearest on-manifold point is not its own base would carry a
misleading label (e.g. a sphere point pushed past the center) and is
rejected.  Reflection and fractional companions feed the pairwise losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

__all__ = ["AugmentedSample", "augment", "nearest_neighbor_pairs", "draw_normal_direction"]


@dataclass
class AugmentedSample:
    """One off-manifold point with its companions."""

    base_index: int
    base: np.ndarray
    direction: np.ndarray  # unit vector in the normal space at the base
    level: int
    magnitude: float
    point: np.ndarray  # base + level * magnitude * direction
    label: float  # level * magnitude
    reflection: np.ndarray | None = None  # base - level*magnitude*direction
    fractions: list = field(default_factory=list)  # (fraction, point, label)
    partner_index: int | None = None  # similar-pair partner of the base point


def draw_normal_direction(normal_basis: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random unit vector in the span of a normal basis, via shared-weight mixing."""
    l = normal_basis.shape[1]
    while True:
        w = rng.standard_normal(l)
        v = normal_basis @ w
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            return v / norm


def nearest_neighbor_pairs(dataset: np.ndarray) -> np.ndarray:
    """Index of each point's nearest other point (similar-pair partners)."""
    tree = cKDTree(dataset)
    _, idx = tree.query(dataset, k=2)
    return idx[:, 1].astype(int)


def augment(
    dataset: np.ndarray,
    charts,
    i_max: int,
    epsilon: float,
    fractions=(0.5,),
    rng: np.random.Generator | None = None,
) -> list[AugmentedSample]:
    """Build augmented samples for every base point at levels 1..i_max.

    Charts must already be orientation-aligned.  Rejection of any candidate
    (level point, reflection, fraction) is decided by a nearest-neighbor
    check against the full dataset.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if i_max < 1:
        raise ValueError("need at least one augmentation level")
    dataset = np.asarray(dataset, dtype=float)
    rng = rng if rng is not None else np.random.default_rng(0)
    N, n = dataset.shape
    tree = cKDTree(dataset)
    _, nn2 = tree.query(dataset, k=2)
    partners = nn2[:, 1].astype(int)

    directions = np.stack([draw_normal_direction(c.normal, rng) for c in charts])

    levels = np.arange(1, i_max + 1)
    offsets = levels[None, :, None] * epsilon * directions[:, None, :]  # (N, I, n)
    plus = dataset[:, None, :] + offsets
    minus = dataset[:, None, :] - offsets

    def own_base(points):
        _, nn = tree.query(points.reshape(-1, n))
        return nn.reshape(points.shape[:-1]) == np.arange(N)[:, None]

    plus_ok = own_base(plus)
    minus_ok = own_base(minus)

    frac_points = {}
    frac_ok = {}
    for f in fractions:
        if not 0.0 < f < 1.0:
            raise ValueError("fractions must lie strictly between 0 and 1")
        pts = dataset[:, None, :] + f * offsets
        frac_points[f] = pts
        frac_ok[f] = own_base(pts)

    samples: list[AugmentedSample] = []
    for b in range(N):
        for ii, i in enumerate(levels):
            if not plus_ok[b, ii]:
                continue
            fr = [
                (f, frac_points[f][b, ii].copy(), f * i * epsilon)
                for f in fractions
                if frac_ok[f][b, ii]
            ]
            samples.append(
                AugmentedSample(
                    base_index=b,
                    base=dataset[b].copy(),
                    direction=directions[b].copy(),
                    level=int(i),
                    magnitude=epsilon,
                    point=plus[b, ii].copy(),
                    label=float(i * epsilon),
                    reflection=minus[b, ii].copy() if minus_ok[b, ii] else None,
                    fractions=fr,
                    partner_index=int(partners[b]),
                )
            )
    return samples
