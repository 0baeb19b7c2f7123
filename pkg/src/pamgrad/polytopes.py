"""Constrained discrete exponential-family distributions over small state spaces.

A distribution is described by a state-space spec (which constrained set of
binary vectors is feasible) together with a vector of natural parameters
``theta`` and a temperature ``tau``:

    p(z; theta, tau) = exp(<z, theta>/tau - A(theta/tau))   for z feasible,

where ``A`` is the log-partition function. Everything in this module is an
exact, enumeration-based oracle: probabilities, marginals, expected losses,
expected-loss gradients and exact sampling, all guarded by a configurable cap
on the number of feasible states.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DimensionMismatch,
    GuardExceeded,
    InfeasibleState,
    UnsupportedSpec,
)

DEFAULT_GUARD = 10**6

# Generic enumeration is capped for the two graph-structured variants; larger
# instances go through the dedicated solvers instead.
MAX_TREE_VERTICES = 9
MAX_GRID_SIDE = 5


def edge_list(v: int) -> list[tuple[int, int]]:
    """Undirected edges of the complete graph on ``v`` vertices, (i<j) lexicographic."""
    return [(i, j) for i in range(v) for j in range(i + 1, v)]


@dataclass(frozen=True)
class Categorical:
    """One-hot vectors of length ``n`` (a single choice among n options)."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Categorical needs n >= 1, got {self.n}")

    @property
    def dim(self) -> int:
        return self.n

    def state_count(self) -> int:
        return self.n

    def is_feasible(self, bits: np.ndarray) -> bool:
        bits = np.asarray(bits)
        return bits.shape == (self.n,) and set(np.unique(bits)) <= {0, 1} and bits.sum() == 1

    def label(self) -> str:
        return f"categorical-{self.n}"


@dataclass(frozen=True)
class KSubset:
    """Binary vectors of length ``n`` with exactly ``k`` ones."""

    n: int
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError(f"KSubset needs 1 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def dim(self) -> int:
        return self.n

    def state_count(self) -> int:
        return math.comb(self.n, self.k)

    def is_feasible(self, bits: np.ndarray) -> bool:
        bits = np.asarray(bits)
        return bits.shape == (self.n,) and set(np.unique(bits)) <= {0, 1} and bits.sum() == self.k

    def label(self) -> str:
        return f"ksubset-{self.n}-{self.k}"


@dataclass(frozen=True)
class SpanningTree:
    """Spanning trees of the complete graph on ``v`` vertices.

    States are indicators over the v(v-1)/2 undirected edges, ordered by
    ``edge_list``.
    """

    v: int

    def __post_init__(self):
        if self.v < 2:
            raise ValueError(f"SpanningTree needs v >= 2, got {self.v}")

    @property
    def dim(self) -> int:
        return self.v * (self.v - 1) // 2

    def state_count(self) -> int:
        # Cayley's formula.
        return self.v ** (self.v - 2)

    def is_feasible(self, bits: np.ndarray) -> bool:
        bits = np.asarray(bits)
        if bits.shape != (self.dim,) or not set(np.unique(bits)) <= {0, 1}:
            return False
        if bits.sum() != self.v - 1:
            return False
        parent = list(range(self.v))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for idx, (i, j) in enumerate(edge_list(self.v)):
            if bits[idx]:
                ri, rj = find(i), find(j)
                if ri == rj:
                    return False  # cycle
                parent[ri] = rj
        return len({find(i) for i in range(self.v)}) == 1

    def label(self) -> str:
        return f"spanningtree-{self.v}"


@dataclass(frozen=True)
class GridPath:
    """Simple paths from the top-left to the bottom-right cell of a grid.

    States are indicators over the rows*cols cells (row-major). ``neighborhood``
    is 4 (orthogonal moves) or 8 (orthogonal plus diagonal moves).
    """

    rows: int
    cols: int
    neighborhood: int = 4

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"GridPath needs rows, cols >= 1, got {self.rows}x{self.cols}")
        if self.neighborhood not in (4, 8):
            raise ValueError(f"neighborhood must be 4 or 8, got {self.neighborhood}")

    @property
    def dim(self) -> int:
        return self.rows * self.cols

    def state_count(self) -> int | None:
        return None  # no closed form; counted during enumeration

    def neighbors(self, cell: int) -> list[int]:
        r, c = divmod(cell, self.cols)
        steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
        if self.neighborhood == 8:
            steps += [(-1, -1), (-1, 1), (1, -1), (1, 1)]
        out = []
        for dr, dc in steps:
            rr, cc = r + dr, c + dc
            if 0 <= rr < self.rows and 0 <= cc < self.cols:
                out.append(rr * self.cols + cc)
        return out

    def is_feasible(self, bits: np.ndarray) -> bool:
        """True iff the marked cells can be traversed as one simple path TL -> BR."""
        bits = np.asarray(bits)
        if bits.shape != (self.dim,) or not set(np.unique(bits)) <= {0, 1}:
            return False
        marked = {int(i) for i in np.flatnonzero(bits)}
        start, goal = 0, self.dim - 1
        if start not in marked or goal not in marked:
            return False
        if self.dim == 1:
            return marked == {0}

        def dfs(cell, remaining):
            if cell == goal:
                return not remaining
            for nb in self.neighbors(cell):
                if nb in remaining:
                    if dfs(nb, remaining - {nb}):
                        return True
            return False

        return dfs(start, marked - {start})

    def label(self) -> str:
        return f"gridpath-{self.rows}x{self.cols}"


PolytopeSpec = Categorical | KSubset | SpanningTree | GridPath


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------

def check_theta(spec: PolytopeSpec, theta) -> np.ndarray:
    """Validate and convert a parameter vector; raises DimensionMismatch."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.shape[0] != spec.dim:
        raise DimensionMismatch(
            f"theta has shape {theta.shape}, spec dimension is {spec.dim}"
        )
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta entries must be finite")
    return theta


def check_tau(tau: float) -> float:
    tau = float(tau)
    if not (tau > 0.0) or not math.isfinite(tau):
        raise ValueError(f"temperature must be a positive finite real, got {tau}")
    return tau


def _check_guard(count: int, guard: int):
    if count > guard:
        raise GuardExceeded(f"state space has {count} states, guard is {guard}")


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

def enumerate_states(spec: PolytopeSpec, guard: int = DEFAULT_GUARD) -> np.ndarray:
    """All feasible states as an (n_states, m) int8 array.

    Rows are sorted ascending lexicographically over the bit vector, which is
    the package-wide canonical state order.
    """
    if isinstance(spec, Categorical):
        _check_guard(spec.state_count(), guard)
        states = np.eye(spec.n, dtype=np.int8)
    elif isinstance(spec, KSubset):
        _check_guard(spec.state_count(), guard)
        states = np.zeros((spec.state_count(), spec.n), dtype=np.int8)
        for row, positions in enumerate(itertools.combinations(range(spec.n), spec.k)):
            states[row, list(positions)] = 1
    elif isinstance(spec, SpanningTree):
        if spec.v > MAX_TREE_VERTICES:
            raise UnsupportedSpec(
                f"generic enumeration supports spanning trees up to v={MAX_TREE_VERTICES}"
            )
        _check_guard(spec.state_count(), guard)
        states = _enumerate_spanning_trees(spec)
    elif isinstance(spec, GridPath):
        if spec.rows > MAX_GRID_SIDE or spec.cols > MAX_GRID_SIDE:
            raise UnsupportedSpec(
                f"generic enumeration supports grids up to {MAX_GRID_SIDE}x{MAX_GRID_SIDE}"
            )
        states = _enumerate_grid_paths(spec, guard)
    else:
        raise UnsupportedSpec(f"unknown spec type {type(spec).__name__}")
    order = np.lexsort(states.T[::-1])
    return states[order]


def _enumerate_spanning_trees(spec: SpanningTree) -> np.ndarray:
    edges = edge_list(spec.v)
    rows = []
    for subset in itertools.combinations(range(len(edges)), spec.v - 1):
        parent = list(range(spec.v))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        acyclic = True
        for idx in subset:
            i, j = edges[idx]
            ri, rj = find(i), find(j)
            if ri == rj:
                acyclic = False
                break
            parent[ri] = rj
        if acyclic:  # v-1 acyclic edges on v vertices are automatically spanning
            bits = np.zeros(len(edges), dtype=np.int8)
            bits[list(subset)] = 1
            rows.append(bits)
    return np.array(rows, dtype=np.int8)


def _enumerate_grid_paths(spec: GridPath, guard: int) -> np.ndarray:
    goal = spec.dim - 1
    seen: set[bytes] = set()
    rows = []
    if spec.dim == 1:
        return np.ones((1, 1), dtype=np.int8)

    def dfs(cell, visited):
        if cell == goal:
            bits = np.zeros(spec.dim, dtype=np.int8)
            bits[list(visited)] = 1
            key = bits.tobytes()
            if key not in seen:
                seen.add(key)
                rows.append(bits)
                _check_guard(len(rows), guard)
            return
        for nb in spec.neighbors(cell):
            if nb not in visited:
                visited.add(nb)
                dfs(nb, visited)
                visited.remove(nb)

    dfs(0, {0})
    return np.array(rows, dtype=np.int8)


# ---------------------------------------------------------------------------
# Distribution quantities
# ---------------------------------------------------------------------------

def weight(z, theta) -> float:
    """Inner product <z, theta>, the unnormalized log-mass of a state."""
    z = np.asarray(z, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if z.shape != theta.shape:
        raise DimensionMismatch(f"state shape {z.shape} vs theta shape {theta.shape}")
    return float(np.dot(z, theta))


def _log_weights(spec, theta, tau, guard):
    theta = check_theta(spec, theta)
    tau = check_tau(tau)
    states = enumerate_states(spec, guard=guard)
    return states, states.astype(float) @ (theta / tau)


def log_partition(spec, theta, tau: float = 1.0, guard: int = DEFAULT_GUARD) -> float:
    """log sum_z exp(<z, theta>/tau), via max-subtracted log-sum-exp."""
    _, lw = _log_weights(spec, theta, tau, guard)
    return float(logsumexp(lw))


def state_probabilities(spec, theta, tau: float = 1.0, guard: int = DEFAULT_GUARD):
    """(states, probabilities) in canonical state order; probabilities sum to 1."""
    states, lw = _log_weights(spec, theta, tau, guard)
    probs = np.exp(lw - logsumexp(lw))
    return states, probs


def pmf(spec, theta, tau: float, z, strict: bool = False,
        guard: int = DEFAULT_GUARD) -> float:
    """Probability of state ``z``; 0 for infeasible ``z`` unless ``strict``."""
    theta = check_theta(spec, theta)
    tau = check_tau(tau)
    z = np.asarray(z)
    if z.shape != (spec.dim,):
        raise DimensionMismatch(f"state has shape {z.shape}, expected ({spec.dim},)")
    if not spec.is_feasible(z):
        if strict:
            raise InfeasibleState(f"state is not feasible for {spec.label()}")
        return 0.0
    a = log_partition(spec, theta, tau, guard=guard)
    return float(np.exp(np.dot(z.astype(float), theta) / tau - a))


def marginals(spec, theta, tau: float = 1.0, guard: int = DEFAULT_GUARD) -> np.ndarray:
    """Expected state vector mu = sum_z p(z) z."""
    states, probs = state_probabilities(spec, theta, tau, guard=guard)
    return states.astype(float).T @ probs


def sample_exact(spec, theta, tau: float, rng: np.random.Generator,
                 size: int | None = None, guard: int = DEFAULT_GUARD) -> np.ndarray:
    """Draw from p(z; theta, tau) by enumeration.

    Returns a single (m,) state, or (size, m) when ``size`` is given.
    """
    states, probs = state_probabilities(spec, theta, tau, guard=guard)
    if size is None:
        idx = rng.choice(len(states), p=probs)
        return states[idx].copy()
    idx = rng.choice(len(states), size=size, p=probs)
    return states[idx]


def exact_expected_loss(spec, theta, tau: float, loss,
                        guard: int = DEFAULT_GUARD) -> float:
    """E_z[loss(z)] under p(z; theta, tau); ``loss`` maps a state to a scalar."""
    states, probs = state_probabilities(spec, theta, tau, guard=guard)
    values = np.array([loss(z) for z in states], dtype=float)
    return float(np.dot(probs, values))


def exact_gradient(spec, theta, tau: float, loss,
                   guard: int = DEFAULT_GUARD) -> np.ndarray:
    """Gradient of E_z[loss(z)] with respect to theta.

    Closed form (1/tau) * (E[z loss(z)] - E[loss(z)] mu); matches central
    finite differences of ``exact_expected_loss``.
    """
    states, probs = state_probabilities(spec, theta, tau, guard=guard)
    values = np.array([loss(z) for z in states], dtype=float)
    fs = states.astype(float)
    weighted = fs.T @ (probs * values)        # E[z loss(z)]
    mu = fs.T @ probs
    return (weighted - float(np.dot(probs, values)) * mu) / tau
