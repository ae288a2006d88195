"""Local PCA charts: per-point tangent/normal bases from nearest neighbors.

The neighborhood of each data point, centered at the point itself, yields a
covariance whose leading eigenvectors span the tangent space and trailing
eigenvectors span the normal space.  The split index comes from the largest
consecutive eigenvalue gap, taken as the dataset-wide mode.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "LocalChart",
    "local_pca",
    "build_charts",
    "estimate_intrinsic_dim",
    "default_epsilon_aug",
]


@dataclass
class LocalChart:
    """Eigen-structure of one local neighborhood."""

    center: np.ndarray
    neighbor_indices: np.ndarray
    eigenvalues: np.ndarray  # descending
    tangent: np.ndarray  # (n, n - l), columns orthonormal
    normal: np.ndarray  # (n, l), columns orthonormal
    intrinsic_dim: int

    @property
    def ambient_dim(self) -> int:
        return self.center.shape[0]


def estimate_intrinsic_dim(eigenvalues: np.ndarray) -> int:
    """Number of constraints from the largest consecutive eigengap.

    With eigenvalues sorted descending, a gap after position j (1-based)
    splits tangent from normal directions, leaving l = n - j constraints.
    Equal eigenvalues expose no gap; that degenerate case returns 0.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size < 2:
        raise ValueError("need at least two eigenvalues")
    gaps = lam[:-1] - lam[1:]
    if np.all(gaps == 0.0):
        warnings.warn("all eigenvalues equal; intrinsic dimension undetermined")
        return 0
    j = int(np.argmax(gaps)) + 1
    return lam.size - j


def _eigendecompose(dataset: np.ndarray, index: int, neighbor_idx: np.ndarray):
    center = dataset[index]
    X = dataset[neighbor_idx] - center
    K = len(neighbor_idx)
    S = X.T @ X / (K - 1)
    lam, vecs = np.linalg.eigh(S)
    order = np.argsort(lam)[::-1]
    return np.clip(lam[order], 0.0, None), vecs[:, order]


def local_pca(dataset: np.ndarray, index: int, K: int, intrinsic_dim: int | None = None) -> LocalChart:
    """Chart at one dataset point from its K nearest neighbors (self excluded)."""
    dataset = np.asarray(dataset, dtype=float)
    N, n = dataset.shape
    if K < n:
        raise ValueError(f"K must be at least the ambient dimension {n}, got {K}")
    if N <= K:
        raise ValueError(f"dataset of size {N} cannot provide {K} neighbors")
    d = np.linalg.norm(dataset - dataset[index], axis=1)
    order = np.argsort(d, kind="stable")
    neighbor_idx = order[order != index][:K]
    return _finalize_chart(dataset, index, neighbor_idx, intrinsic_dim)


def _finalize_chart(dataset, index, neighbor_idx, intrinsic_dim):
    lam, vecs = _eigendecompose(dataset, index, neighbor_idx)
    n = dataset.shape[1]
    l = intrinsic_dim if intrinsic_dim is not None else estimate_intrinsic_dim(lam)
    return LocalChart(
        center=dataset[index].copy(),
        neighbor_indices=np.asarray(neighbor_idx),
        eigenvalues=lam,
        tangent=vecs[:, : n - l],
        normal=vecs[:, n - l :],
        intrinsic_dim=l,
    )


def build_charts(dataset: np.ndarray, K: int | None = None, intrinsic_dim: int | None = None):
    """Charts for every dataset point plus the dataset-level constraint count.

    Per-chart gap estimates vote; charts disagreeing with the mode are
    re-split using the dataset-level value so all charts share one l.
    """
    dataset = np.asarray(dataset, dtype=float)
    N, n = dataset.shape
    if K is None:
        # the eigengap vote needs enough neighbors to separate the tangent
        # eigenvalue spread from the tangent/normal gap; 10 is a coin flip
        # on a 2-tangent-dimension manifold
        K = max(2 * n, 20)
    if K < n:
        raise ValueError(f"K must be at least the ambient dimension {n}, got {K}")
    if N <= K:
        raise ValueError(f"dataset of size {N} cannot provide {K} neighbors")
    tree = cKDTree(dataset)
    _, idx = tree.query(dataset, k=K + 1)
    charts: list[LocalChart] = []
    decomposed = []
    votes = np.zeros(n + 1, dtype=int)
    for i in range(N):
        neighbors = idx[i][idx[i] != i][:K]
        lam, vecs = _eigendecompose(dataset, i, neighbors)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            li = estimate_intrinsic_dim(lam)
        votes[li] += 1
        decomposed.append((neighbors, lam, vecs))
    if intrinsic_dim is None:
        intrinsic_dim = int(np.argmax(votes[1:]) + 1) if votes[1:].any() else 0
    if intrinsic_dim < 1:
        raise ValueError("could not determine a positive constraint count from the data")
    for i in range(N):
        neighbors, lam, vecs = decomposed[i]
        charts.append(
            LocalChart(
                center=dataset[i].copy(),
                neighbor_indices=neighbors,
                eigenvalues=lam,
                tangent=vecs[:, : n - intrinsic_dim],
                normal=vecs[:, n - intrinsic_dim :],
                intrinsic_dim=intrinsic_dim,
            )
        )
    return charts, intrinsic_dim


def default_epsilon_aug(charts) -> float:
    """Augmentation magnitude: sqrt of the mean tangent-space eigenvalue."""
    means = [np.mean(c.eigenvalues[: c.ambient_dim - c.intrinsic_dim]) for c in charts]
    return float(np.sqrt(np.mean(means)))
