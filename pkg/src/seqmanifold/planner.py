"""Optimal sequential planning across a fixed chain of constraint manifolds.

A tree is grown on each manifold toward its intersection with the next one;
discovered intersection configurations seed the next tree under a synthetic
root that preserves their accumulated costs.  Steering either projects a
random direction onto the current tangent space or descends toward the next
manifold's zero set; new samples are projected back onto the current
manifold (or onto the intersection, with a randomized distance threshold).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .collision import FreeSpace
from .manifolds import (
    Manifold,
    ProjectionSettings,
    evaluate,
    intersect,
    jacobian,
    project,
    tangent_basis,
)
from .tree import PlanTree

__all__ = [
    "PlannerParams",
    "SequencedTask",
    "PathResult",
    "sample_uniform",
    "steer_point",
    "steer_constraint",
    "steer",
    "apply_upsilon",
    "plan_sequence",
    "plan_sequence_greedy",
    "plan_single_tree",
]


@dataclass(frozen=True)
class PlannerParams:
    """Planner hyperparameters (defaults follow the 3D point benchmark)."""

    alpha: float = 1.0  # max step size
    beta: float = 0.1  # probability of steering toward the next manifold
    eps: float = 0.01  # constraint satisfaction threshold
    rho: float = 0.1  # min spacing between intersection nodes
    r: float = 1.5  # randomized projection-distance parameter
    m: int = 1200  # inner-loop samples per manifold
    gamma: float | None = None  # rewiring radius constant; None -> 2*diam(bounds)
    seed: int = 0

    def __post_init__(self):
        if self.alpha <= 0 or self.r <= 0 or self.eps <= 0:
            raise ValueError("alpha, r and eps must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        if self.m < 1:
            raise ValueError("m must be at least 1")


@dataclass(frozen=True)
class SequencedTask:
    """Manifold sequence, start configuration, free space, transition hooks."""

    manifolds: tuple[Manifold, ...]
    start: np.ndarray
    free: FreeSpace
    hooks: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "manifolds", tuple(self.manifolds))
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        if len(self.manifolds) < 2:
            raise ValueError("a task needs at least two manifolds")
        n = len(self.manifolds) - 1
        hooks = self.hooks if self.hooks is not None else (None,) * n
        if len(hooks) != n:
            raise ValueError(f"expected {n} transition hooks, got {len(hooks)}")
        object.__setattr__(self, "hooks", tuple(hooks))

    @property
    def dim(self) -> int:
        return self.start.shape[0]


@dataclass
class PathResult:
    success: bool
    waypoints: list = field(default_factory=list)
    segments: list = field(default_factory=list)  # (first, last) waypoint index per manifold
    cost: float = float("inf")
    nodes_per_stage: list = field(default_factory=list)
    extensions: int = 0
    failure_stage: int | None = None
    elapsed: float = 0.0
    trees: list = field(default_factory=list)
    intersections: list = field(default_factory=list)  # configs found per transition
    stage_of_node: list | None = None  # single-tree variant: manifold index per node


def sample_uniform(bounds, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample inside an axis-aligned box."""
    return rng.uniform(bounds.low, bounds.high)


def steer_point(q_near: np.ndarray, q_rand: np.ndarray, manifold: Manifold) -> np.ndarray:
    """Project q_rand - q_near onto the tangent space at q_near."""
    J = jacobian(manifold, q_near)
    V = tangent_basis(J)
    if V.shape[1] == 0:
        return np.zeros_like(q_near)
    diff = q_rand - q_near
    return V @ (V.T @ diff)


def steer_constraint(q_near: np.ndarray, m_cur: Manifold, m_next: Manifold) -> np.ndarray:
    """Steepest-descent direction toward the next manifold's zero set,
    restricted to the tangent space of the current one.

    Solves the stationarity system of min ||h_next + J_next d||^2 subject to
    J_cur d = 0 via a least-squares solve; a singular system falls back to
    the minimum-norm solution (possibly zero).
    """
    k = q_near.shape[0]
    J_cur = np.atleast_2d(jacobian(m_cur, q_near))
    J_next = np.atleast_2d(jacobian(m_next, q_near))
    h_next = np.atleast_1d(evaluate(m_next, q_near))
    l_cur = J_cur.shape[0]
    A = np.zeros((k + l_cur, k + l_cur))
    A[:k, :k] = J_next.T @ J_next
    A[:k, k:] = J_cur.T
    A[k:, :k] = J_cur
    rhs = np.zeros(k + l_cur)
    rhs[:k] = -J_next.T @ h_next
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    d = sol[:k]
    if not np.all(np.isfinite(d)):
        return np.zeros(k)
    return d


def steer(
    params: PlannerParams,
    q_near: np.ndarray,
    q_rand: np.ndarray,
    m_cur: Manifold,
    m_next: Manifold,
    m_intersection: Manifold,
    rng: np.random.Generator,
    settings: ProjectionSettings,
) -> np.ndarray | None:
    """One steering step; returns the projected configuration or None.

    A zero direction or a failed projection discards the sample.
    """
    if rng.uniform() < params.beta:
        d = steer_constraint(q_near, m_cur, m_next)
    else:
        d = steer_point(q_near, q_rand, m_cur)
    norm = np.linalg.norm(d)
    if norm <= 1e-12:
        return None
    q_new = q_near + params.alpha * d / norm
    if np.linalg.norm(evaluate(m_next, q_new)) < rng.uniform(0.0, params.r):
        return project(q_new, m_intersection, settings)
    return project(q_new, m_cur, settings)


def apply_upsilon(hook, free: FreeSpace, q_transition: np.ndarray) -> FreeSpace:
    """Free-space transition at a manifold intersection; None means identity."""
    if hook is None:
        return free
    return hook(free, q_transition)


def _radius(params: PlannerParams, gamma: float, n_nodes: int, k: int) -> float:
    if n_nodes < 2:
        return 0.0
    return min(gamma * (np.log(n_nodes) / n_nodes) ** (1.0 / k), params.alpha)


def _resolve(task: SequencedTask, params: PlannerParams):
    start_err = np.linalg.norm(evaluate(task.manifolds[0], task.start))
    if start_err > params.eps:
        raise ValueError(
            f"start violates the first manifold: ||h|| = {start_err:.3g} > {params.eps}"
        )
    gamma = params.gamma if params.gamma is not None else 2.0 * task.free.bounds.diameter
    free = replace(task.free, resolution=params.alpha / 10.0)
    settings = ProjectionSettings(tolerance=params.eps)
    return gamma, free, settings


def plan_sequence(task: SequencedTask, params: PlannerParams) -> PathResult:
    return _plan_subtrees(task, params, greedy=False)


def plan_sequence_greedy(task: SequencedTask, params: PlannerParams) -> PathResult:
    """Variant seeding each next tree with only the cheapest intersection node."""
    return _plan_subtrees(task, params, greedy=True)


def _plan_subtrees(task: SequencedTask, params: PlannerParams, greedy: bool) -> PathResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(params.seed)
    gamma, free, settings = _resolve(task, params)
    k = task.dim
    n = len(task.manifolds) - 1

    trees: list[PlanTree] = []
    tree = PlanTree(k, root_config=task.start)
    result = PathResult(success=False)

    for i in range(n):
        m_cur, m_next = task.manifolds[i], task.manifolds[i + 1]
        m_int = intersect(m_cur, m_next)
        v_goal: list[int] = []
        for _ in range(params.m):
            q_rand = sample_uniform(free.bounds, rng)
            near_idx = tree.nearest(q_rand)
            q_new = steer(params, tree.config(near_idx), q_rand, m_cur, m_next, m_int, rng, settings)
            if q_new is None:
                continue
            if np.linalg.norm(evaluate(m_cur, q_new)) > params.eps:
                continue
            radius = _radius(params, gamma, tree.real_node_count, k)
            if not tree.extend(near_idx, q_new, free, radius):
                continue
            if np.linalg.norm(evaluate(m_next, q_new)) < params.eps:
                if not v_goal or _nearest_distance(tree, v_goal, q_new) >= params.rho:
                    v_goal.append(tree.size - 1)
        result.nodes_per_stage.append(tree.real_node_count)
        result.extensions += tree.extensions
        if not v_goal:
            result.failure_stage = i
            result.elapsed = time.perf_counter() - t0
            result.trees = trees + [tree]
            return result
        result.intersections.append(tree.configs[np.asarray(v_goal)].copy())
        seeds = [min(v_goal, key=lambda j: tree.cost(j))] if greedy else v_goal
        next_tree = PlanTree(k, root_config=None)
        for j in seeds:
            next_tree.add_seed(tree.config(j), tree.cost(j), origin=j)
        free = apply_upsilon(task.hooks[i], free, tree.config(v_goal[0]))
        trees.append(tree)
        tree = next_tree

    trees.append(tree)
    result.trees = trees
    goal_nodes = range(tree.first_real, tree.size)
    best = min(goal_nodes, key=lambda j: tree.cost(j))
    result.success = True
    result.cost = tree.cost(best)
    result.waypoints, result.segments = _extract_path(trees, best)
    result.elapsed = time.perf_counter() - t0
    return result


def _nearest_distance(tree: PlanTree, v_goal: list[int], q: np.ndarray) -> float:
    pts = tree.configs[np.asarray(v_goal)]
    return float(np.min(np.linalg.norm(pts - q, axis=1)))


def _extract_path(trees: list[PlanTree], goal_idx: int):
    """Walk parents back through the chained trees; returns waypoints and
    per-manifold (first, last) waypoint index ranges."""
    chunks: list[list[np.ndarray]] = []
    tree_pos = len(trees) - 1
    idx = goal_idx
    while tree_pos >= 0:
        tree = trees[tree_pos]
        chunk: list[np.ndarray] = []
        while True:
            parent = int(tree.parents[idx])
            chunk.append(tree.config(idx).copy())
            if parent < 0:
                tree_pos = -1
                break
            if parent == 0 and tree.synthetic_root:
                idx = tree.origins[idx]
                tree_pos -= 1
                break
            idx = parent
        chunks.append(chunk)
    waypoints: list[np.ndarray] = []
    boundaries: list[int] = []
    for chunk in reversed(chunks):
        pts = list(reversed(chunk))
        if waypoints:
            pts = pts[1:]  # the seed repeats the origin configuration
        waypoints.extend(pts)
        boundaries.append(len(waypoints) - 1)
    segments = []
    startw = 0
    for b in boundaries:
        segments.append((startw, b))
        startw = b
    # the seeded final tree contributes a single node already covered by the
    # previous segment's endpoint
    if len(segments) > 1 and segments[-1][0] == segments[-1][1]:
        segments.pop()
    return waypoints, segments


def plan_single_tree(task: SequencedTask, params: PlannerParams) -> PathResult:
    """Grow one tree across the whole sequence instead of per-manifold trees.

    Each node stores the index of the manifold it lives on; steering targets
    that node's next manifold, and the intersection spacing parameter plays
    no role here.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(params.seed)
    gamma, free, settings = _resolve(task, params)
    k = task.dim
    n = len(task.manifolds) - 1

    tree = PlanTree(k, root_config=task.start)
    stage = [0]
    free_spaces: list[FreeSpace | None] = [free] + [None] * n
    intersections = [intersect(task.manifolds[i], task.manifolds[i + 1]) for i in range(n)]
    goal_nodes: list[int] = []

    for _ in range(n * params.m):
        q_rand = sample_uniform(free.bounds, rng)
        near_idx = tree.nearest(q_rand)
        i = stage[near_idx]
        if i >= n:
            continue  # already on the goal manifold; nothing left to target
        m_cur, m_next = task.manifolds[i], task.manifolds[i + 1]
        stage_free = free_spaces[i]
        q_new = steer(params, tree.config(near_idx), q_rand, m_cur, m_next, intersections[i], rng, settings)
        if q_new is None:
            continue
        if np.linalg.norm(evaluate(m_cur, q_new)) > params.eps:
            continue
        radius = _radius(params, gamma, tree.real_node_count, k)
        if not tree.extend(near_idx, q_new, stage_free, radius):
            continue
        new_idx = tree.size - 1
        if np.linalg.norm(evaluate(m_next, q_new)) < params.eps:
            stage.append(i + 1)
            if free_spaces[i + 1] is None:
                free_spaces[i + 1] = apply_upsilon(task.hooks[i], stage_free, q_new)
            if i + 1 == n:
                goal_nodes.append(new_idx)
        else:
            stage.append(i)

    result = PathResult(success=bool(goal_nodes))
    result.nodes_per_stage = [tree.real_node_count]
    result.extensions = tree.extensions
    result.trees = [tree]
    result.stage_of_node = list(stage)
    if not goal_nodes:
        result.failure_stage = max(stage)
        result.elapsed = time.perf_counter() - t0
        return result
    best = min(goal_nodes, key=lambda j: tree.cost(j))
    chain = list(reversed(tree.path_to_root(best)))
    result.cost = tree.cost(best)
    result.waypoints = [tree.config(j).copy() for j in chain]
    boundaries: list[int] = []
    for w, j in enumerate(chain[1:], start=1):
        if stage[j] != stage[chain[w - 1]]:
            boundaries.append(w)
    segments = []
    startw = 0
    for b in boundaries + [len(chain) - 1]:
        if b > startw:
            segments.append((startw, b))
            startw = b
    result.segments = segments
    result.elapsed = time.perf_counter() - t0
    return result
