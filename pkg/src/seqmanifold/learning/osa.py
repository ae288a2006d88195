"""Orientation-consistent alignment of per-point normal-space bases.

Neighboring charts carry eigenvector bases with arbitrary sign and in-plane
rotation.  Pairs are aligned by optimizing a rotation R = exp(L) over a
skew-symmetric parameterization; because the two orientation classes of a
basis cannot be rotated into each other, each edge tries both sign flips on
both sides and a breadth-first pass over a spanning tree picks consistent
orientations globally, compounding rotations along the way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
from scipy.spatial import cKDTree

__all__ = ["AlignmentGraph", "so_exp", "osa_local_align", "osa_align"]


def _skew_from_params(params: np.ndarray, l: int) -> np.ndarray:
    """Skew-symmetric matrices (E, l, l) from parameter rows (E, l(l-1)/2)."""
    E = params.shape[0]
    L = np.zeros((E, l, l))
    iu = np.triu_indices(l, k=1)
    L[:, iu[0], iu[1]] = params
    L[:, iu[1], iu[0]] = -params
    return L


def so_exp(params: np.ndarray, l: int) -> np.ndarray:
    """Batched matrix exponential so(l) -> SO(l) via scaling and squaring."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    E = params.shape[0]
    if l == 1:
        return np.ones((E, 1, 1))
    L = _skew_from_params(params, l)
    norms = np.linalg.norm(L, axis=(1, 2))
    squarings = np.maximum(0, np.ceil(np.log2(np.maximum(norms, 1e-30) / 0.5))).astype(int)
    s_max = int(squarings.max(initial=0))
    L = L / (2.0 ** squarings)[:, None, None]
    R = np.broadcast_to(np.eye(l), (E, l, l)).copy()
    term = np.broadcast_to(np.eye(l), (E, l, l)).copy()
    for k in range(1, 15):
        term = term @ L / k
        R += term
    for s in range(1, s_max + 1):
        need = squarings >= s
        R[need] = R[need] @ R[need]
    return R


def _alignment_loss(R: np.ndarray, C: np.ndarray) -> np.ndarray:
    """|| I - R^T C ||_F^2 per edge."""
    l = C.shape[-1]
    res = np.eye(l) - np.swapaxes(R, -1, -2) @ C
    return np.sum(res**2, axis=(-1, -2))


def _optimize_rotations(
    C: np.ndarray, steps: int = 300, lr: float = 0.1, init_scale: float = 1e-3, rng=None
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient descent on the skew parameters for a batch of basis overlaps.

    Returns rotations (E, l, l) and final losses (E,).  Gradients come from
    central differences on the handful of skew parameters.
    """
    E, l = C.shape[0], C.shape[-1]
    p = l * (l - 1) // 2
    if p == 0:
        R = np.ones((E, 1, 1))
        return R, _alignment_loss(R, C)
    rng = rng if rng is not None else np.random.default_rng(0)
    params = rng.uniform(-init_scale, init_scale, size=(E, p))
    h = 1e-6
    for _ in range(steps):
        grad = np.empty_like(params)
        for j in range(p):
            shift = np.zeros(p)
            shift[j] = h
            lp = _alignment_loss(so_exp(params + shift, l), C)
            lm = _alignment_loss(so_exp(params - shift, l), C)
            grad[:, j] = (lp - lm) / (2.0 * h)
        params -= lr * grad
    R = so_exp(params, l)
    return R, _alignment_loss(R, C)


def osa_local_align(
    V_a: np.ndarray, V_c: np.ndarray, steps: int = 300, lr: float = 0.1, rng=None
) -> tuple[np.ndarray, float]:
    """Rotation aligning basis V_a onto V_c and the residual loss."""
    V_a = np.asarray(V_a, dtype=float)
    V_c = np.asarray(V_c, dtype=float)
    C = (V_a.T @ V_c)[None]
    R, loss = _optimize_rotations(C, steps=steps, lr=lr, rng=rng)
    return R[0], float(loss[0])


@dataclass
class AlignmentGraph:
    """Spanning-tree alignment record over a dataset of charts."""

    dag_edges: list  # (parent, child) in breadth-first order
    edge_rotations: dict  # (parent, child) -> {(child_flip, parent_flip): (R, loss)}
    flipped: np.ndarray  # chosen orientation per node
    compound: np.ndarray  # (N, l, l) rotation applied to each basis
    aligned_normals: np.ndarray  # (N, n, l)
    chosen_losses: dict  # (parent, child) -> loss of the committed pair
    root: int = 0


def _spanning_dag(dataset: np.ndarray, H: int) -> list[tuple[int, int]]:
    N = len(dataset)
    tree = cKDTree(dataset)
    dist, idx = tree.query(dataset, k=min(H + 1, N))
    rows, cols, vals = [], [], []
    for i in range(N):
        for d, j in zip(dist[i][1:], idx[i][1:]):
            rows.append(i)
            cols.append(int(j))
            vals.append(float(max(d, 1e-12)))
    graph = coo_matrix((vals, (rows, cols)), shape=(N, N))
    sym = graph.maximum(graph.T)
    n_comp, _ = connected_components(sym, directed=False)
    if n_comp > 1:
        raise ValueError(
            f"{H}-nearest-neighbor graph splits into {n_comp} components; "
            "not all points are reachable from the root -- increase H"
        )
    mst = minimum_spanning_tree(sym).tocoo()
    adjacency: list[list[int]] = [[] for _ in range(N)]
    for i, j in zip(mst.row, mst.col):
        adjacency[int(i)].append(int(j))
        adjacency[int(j)].append(int(i))
    edges: list[tuple[int, int]] = []
    seen = np.zeros(N, dtype=bool)
    seen[0] = True
    queue = [0]
    while queue:
        parent = queue.pop(0)
        for child in sorted(adjacency[parent]):
            if not seen[child]:
                seen[child] = True
                edges.append((parent, child))
                queue.append(child)
    return edges


def osa_align(dataset: np.ndarray, charts, H: int = 10, steps: int = 300, lr: float = 0.1, seed: int = 0):
    """Align all chart normal bases; returns (aligned charts, AlignmentGraph).

    The root keeps its basis un-flipped with an identity compound rotation;
    every other node picks the orientation whose pair loss against its
    parent's committed orientation is smaller.
    """
    dataset = np.asarray(dataset, dtype=float)
    N, n = dataset.shape
    l = charts[0].intrinsic_dim
    edges = _spanning_dag(dataset, H)
    rng = np.random.default_rng(seed)

    bases = np.stack([c.normal for c in charts])  # (N, n, l)
    flipped_bases = bases.copy()
    flipped_bases[:, :, 0] *= -1.0

    E = len(edges)
    parents = np.array([e[0] for e in edges])
    children = np.array([e[1] for e in edges])
    # overlap of the child basis (rows flip with child) with the parent basis
    # (columns flip with parent)
    C_base = np.einsum("enl,enm->elm", bases[children], bases[parents])
    variants = {}
    for child_flip in (False, True):
        for parent_flip in (False, True):
            C = C_base.copy()
            if child_flip:
                C[:, 0, :] *= -1.0
            if parent_flip:
                C[:, :, 0] *= -1.0
            R, loss = _optimize_rotations(C, steps=steps, lr=lr, rng=rng)
            variants[(child_flip, parent_flip)] = (R, loss)

    edge_rotations = {
        (int(p), int(c)): {
            key: (variants[key][0][e], float(variants[key][1][e])) for key in variants
        }
        for e, (p, c) in enumerate(edges)
    }

    flipped = np.zeros(N, dtype=bool)
    compound = np.broadcast_to(np.eye(l), (N, l, l)).copy()
    chosen_losses = {}
    for e, (p, c) in enumerate(edges):
        pf = bool(flipped[p])
        R_keep, loss_keep = edge_rotations[(p, c)][(False, pf)]
        R_flip, loss_flip = edge_rotations[(p, c)][(True, pf)]
        if loss_keep <= loss_flip:
            flipped[c] = False
            compound[c] = R_keep @ compound[p]
            chosen_losses[(p, c)] = loss_keep
        else:
            flipped[c] = True
            compound[c] = R_flip @ compound[p]
            chosen_losses[(p, c)] = loss_flip

    oriented = np.where(flipped[:, None, None], flipped_bases, bases)
    aligned = oriented @ compound

    graph = AlignmentGraph(
        dag_edges=list(edges),
        edge_rotations=edge_rotations,
        flipped=flipped,
        compound=compound,
        aligned_normals=aligned,
        chosen_losses=chosen_losses,
    )
    from dataclasses import replace as _replace

    aligned_charts = [
        _replace(c, normal=aligned[i].copy()) for i, c in enumerate(charts)
    ]
    return aligned_charts, graph
