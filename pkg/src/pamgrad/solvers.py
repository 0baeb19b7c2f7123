"""MAP solvers: argmax_z <z, theta> over each constrained state space.

Ties are always broken toward the lowest index (entry, edge or cell); with
continuous perturbations ties occur with probability zero, so the rule only
matters for noiseless calls.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, UnsupportedSpec
from .polytopes import (
    Categorical,
    GridPath,
    KSubset,
    PolytopeSpec,
    SpanningTree,
    check_theta,
    edge_list,
)


@dataclass
class GridCosts:
    """Per-cell traversal costs of a grid, row-major.

    Costs must be strictly positive: Dijkstra's optimality argument (and the
    equivalence between cheapest walks and cheapest simple paths) needs it.
    """

    rows: int
    cols: int
    cell_costs: np.ndarray
    neighborhood: int = 4

    def __post_init__(self):
        self.cell_costs = np.asarray(self.cell_costs, dtype=float).reshape(-1)
        if self.cell_costs.shape[0] != self.rows * self.cols:
            raise DimensionMismatch(
                f"expected {self.rows * self.cols} cell costs, got {self.cell_costs.shape[0]}"
            )
        if not np.all(self.cell_costs > 0) or not np.all(np.isfinite(self.cell_costs)):
            raise ValueError("cell costs must be finite and strictly positive")
        if self.neighborhood not in (4, 8):
            raise ValueError(f"neighborhood must be 4 or 8, got {self.neighborhood}")


def map_topk(spec: Categorical | KSubset, theta) -> np.ndarray:
    """Indicator of the k largest entries of theta (k=1 for Categorical)."""
    theta = check_theta(spec, theta)
    k = 1 if isinstance(spec, Categorical) else spec.k
    # Stable sort on -theta: equal entries keep ascending index order.
    top = np.argsort(-theta, kind="stable")[:k]
    bits = np.zeros(spec.dim, dtype=np.int8)
    bits[top] = 1
    return bits


def map_spanning_tree(spec: SpanningTree, theta) -> np.ndarray:
    """Maximum-weight spanning tree of the complete graph, by Kruskal's algorithm."""
    theta = check_theta(spec, theta)
    edges = edge_list(spec.v)
    order = np.argsort(-theta, kind="stable")
    parent = list(range(spec.v))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    bits = np.zeros(spec.dim, dtype=np.int8)
    taken = 0
    for idx in order:
        i, j = edges[idx]
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            bits[idx] = 1
            taken += 1
            if taken == spec.v - 1:
                break
    return bits


def map_grid_path(costs: GridCosts) -> np.ndarray:
    """Cell indicator of a minimum-cost top-left to bottom-right path.

    Path cost sums the costs of every visited cell, both endpoints included.
    """
    grid = GridPath(costs.rows, costs.cols, costs.neighborhood)
    c = costs.cell_costs
    n = grid.dim
    goal = n - 1
    dist = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=int)
    dist[0] = c[0]
    heap = [(c[0], 0)]
    done = np.zeros(n, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == goal:
            break
        for v in grid.neighbors(u):
            nd = d + c[v]
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    bits = np.zeros(n, dtype=np.int8)
    u = goal
    while u != -1:
        bits[u] = 1
        u = parent[u] if u != 0 else -1
    return bits


def map_solve(spec: PolytopeSpec, theta) -> np.ndarray:
    """Dispatch to the variant's MAP solver.

    For GridPath the parameters are read as negated cell costs, so every
    entry of theta must be strictly negative.
    """
    if isinstance(spec, (Categorical, KSubset)):
        return map_topk(spec, theta)
    if isinstance(spec, SpanningTree):
        return map_spanning_tree(spec, theta)
    if isinstance(spec, GridPath):
        theta = check_theta(spec, theta)
        if not np.all(theta < 0):
            raise ValueError(
                "grid-path MAP needs strictly negative theta (theta = -costs, costs > 0)"
            )
        return map_grid_path(
            GridCosts(spec.rows, spec.cols, -theta, neighborhood=spec.neighborhood)
        )
    raise UnsupportedSpec(f"unknown spec type {type(spec).__name__}")


def map_solve_batch(spec: PolytopeSpec, thetas: np.ndarray) -> np.ndarray:
    """MAP states for a (batch, m) parameter matrix, as a (batch, m) int8 array.

    Vectorized for Categorical and KSubset; graph-structured variants solve
    row by row.
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2 or thetas.shape[1] != spec.dim:
        raise DimensionMismatch(
            f"batch has shape {thetas.shape}, expected (batch, {spec.dim})"
        )
    batch = thetas.shape[0]
    bits = np.zeros((batch, spec.dim), dtype=np.int8)
    if isinstance(spec, Categorical):
        # argmax resolves ties toward the first (lowest) index
        bits[np.arange(batch), np.argmax(thetas, axis=1)] = 1
    elif isinstance(spec, KSubset):
        top = np.argsort(-thetas, axis=1, kind="stable")[:, : spec.k]
        np.put_along_axis(bits, top, 1, axis=1)
    else:
        for i in range(batch):
            bits[i] = map_solve(spec, thetas[i])
    return bits
