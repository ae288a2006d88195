"""Search tree with cost-optimal extension and rewiring.

The tree records every edge it ever examined (the realized neighbor graph)
and keeps node costs equal to shortest-path distances over that graph: an
insertion first picks the cost-minimizing parent among the collision-free
neighbors, then propagates cost decreases outward.  Plain one-hop rewiring
leaves stale costs when a neighbor gets cheaper later, which would break
the shortest-path equality the tests check against a Dijkstra oracle.
"""

from __future__ import annotations

import heapq

import numpy as np

from .collision import FreeSpace, collision_free

__all__ = ["PlanTree"]


class PlanTree:
    """Array-backed tree over configurations in R^k.

    Node 0 is either a real root (the start configuration) or a synthetic
    root carrying no configuration; seeds attached to a synthetic root keep
    their accumulated cost as the weight of the synthetic edge.
    """

    def __init__(self, dim: int, root_config: np.ndarray | None = None, capacity: int = 256):
        self.dim = dim
        self._configs = np.zeros((capacity, dim))
        self._costs = np.zeros(capacity)
        self._parents = np.full(capacity, -1, dtype=np.int64)
        self.adjacency: list[dict[int, float]] = [{}]
        self.size = 1
        self.synthetic_root = root_config is None
        self.origins: dict[int, int] = {}
        self.extensions = 0
        if root_config is not None:
            self._configs[0] = np.asarray(root_config, dtype=float)
        else:
            self._configs[0] = np.nan

    # -- storage ------------------------------------------------------------

    def _grow(self):
        cap = len(self._costs)
        if self.size < cap:
            return
        self._configs = np.concatenate([self._configs, np.zeros_like(self._configs)])
        self._costs = np.concatenate([self._costs, np.zeros_like(self._costs)])
        self._parents = np.concatenate([self._parents, np.full(cap, -1, dtype=np.int64)])

    def _append(self, config: np.ndarray, cost: float, parent: int) -> int:
        self._grow()
        idx = self.size
        self._configs[idx] = config
        self._costs[idx] = cost
        self._parents[idx] = parent
        self.adjacency.append({})
        self.size += 1
        return idx

    @property
    def configs(self) -> np.ndarray:
        return self._configs[: self.size]

    @property
    def costs(self) -> np.ndarray:
        return self._costs[: self.size]

    @property
    def parents(self) -> np.ndarray:
        return self._parents[: self.size]

    @property
    def first_real(self) -> int:
        return 1 if self.synthetic_root else 0

    @property
    def real_node_count(self) -> int:
        return self.size - self.first_real

    def config(self, idx: int) -> np.ndarray:
        return self._configs[idx]

    def cost(self, idx: int) -> float:
        return float(self._costs[idx])

    def add_seed(self, config: np.ndarray, cost: float, origin: int) -> int:
        """Attach an intersection node under the synthetic root."""
        if not self.synthetic_root:
            raise ValueError("seeds can only be attached to a synthetic root")
        idx = self._append(np.asarray(config, dtype=float), float(cost), 0)
        self.adjacency[0][idx] = float(cost)
        self.adjacency[idx][0] = float(cost)
        self.origins[idx] = origin
        return idx

    # -- queries ------------------------------------------------------------

    def nearest(self, q: np.ndarray) -> int:
        d = np.linalg.norm(self.configs[self.first_real :] - q, axis=1)
        return int(np.argmin(d)) + self.first_real

    def near(self, q: np.ndarray, radius: float) -> np.ndarray:
        d = np.linalg.norm(self.configs[self.first_real :] - q, axis=1)
        return np.flatnonzero(d <= radius) + self.first_real

    # -- extension ----------------------------------------------------------

    def extend(self, near_idx: int, q_new: np.ndarray, free: FreeSpace, radius: float) -> bool:
        """Insert q_new if the edge from its nearest node is collision-free.

        The parent minimizing cost-to-root is chosen among the collision-free
        neighbors within `radius` (ties broken by lowest node index), then
        cost decreases are propagated through the realized graph.
        """
        q_new = np.asarray(q_new, dtype=float)
        q_anchor = self._configs[near_idx]
        if not collision_free(q_anchor, q_new, free):
            return False
        neighbors = self.near(q_new, radius)
        edges: dict[int, float] = {int(near_idx): float(np.linalg.norm(q_new - q_anchor))}
        for j in neighbors:
            j = int(j)
            if j in edges:
                continue
            if collision_free(self._configs[j], q_new, free):
                edges[j] = float(np.linalg.norm(q_new - self._configs[j]))
        best_parent, best_cost = -1, np.inf
        for j in sorted(edges):
            c = self._costs[j] + edges[j]
            if c < best_cost:
                best_parent, best_cost = j, c
        idx = self._append(q_new, best_cost, best_parent)
        for j, w in edges.items():
            self.adjacency[idx][j] = w
            self.adjacency[j][idx] = w
        self.extensions += 1
        self._relax(idx)
        return True

    def _relax(self, source: int):
        """Push cost decreases from `source` through the realized graph."""
        heap = [(self._costs[source], source)]
        while heap:
            c, x = heapq.heappop(heap)
            if c > self._costs[x] + 1e-15:
                continue
            for y, w in self.adjacency[x].items():
                if y == 0 and self.synthetic_root:
                    continue
                nc = c + w
                if nc < self._costs[y]:
                    self._costs[y] = nc
                    self._parents[y] = x
                    heapq.heappush(heap, (nc, y))

    # -- verification helpers -------------------------------------------------

    def recompute_cost(self, idx: int) -> float:
        """Cost of `idx` re-derived by walking parent edges to the root."""
        total = 0.0
        while True:
            parent = int(self._parents[idx])
            if parent < 0:
                return total
            if parent == 0 and self.synthetic_root:
                return total + self.adjacency[idx][0]
            total += float(np.linalg.norm(self._configs[idx] - self._configs[parent]))
            idx = parent

    def path_to_root(self, idx: int) -> list[int]:
        out = [idx]
        while int(self._parents[out[-1]]) >= 0:
            out.append(int(self._parents[out[-1]]))
        return out
