"""Network topologies for the beep-model simulator.

Graphs are undirected, connected, and immutable once built.  Nodes are
indexed 0..N-1; the 2D mesh is numbered row-major.  Level assignments map
each node to a voting level in 1..K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

ER_RETRY_LIMIT = 1000


def default_edge_probability(n: int) -> float:
    """Edge probability (2/N) * log2(N), the sparse-but-connected regime."""
    if n <= 1:
        return 0.0
    return min(1.0, (2.0 / n) * math.log2(n))


@dataclass(frozen=True)
class Complete:
    n: int


@dataclass(frozen=True)
class Mesh2D:
    rows: int
    cols: int


@dataclass(frozen=True)
class ErdosRenyi:
    n: int
    edge_probability: float | None = None  # None: (2/N) * log2(N)


TopologySpec = Complete | Mesh2D | ErdosRenyi


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph with precomputed metrics.

    Attributes:
        node_count: number of nodes N.
        adj: (N, N) boolean adjacency matrix, symmetric, zero diagonal.
        diameter: exact hop diameter (0 for a single node).
        max_degree: maximum vertex degree.
    """

    node_count: int
    adj: np.ndarray
    diameter: int
    max_degree: int
    neighbors: tuple = field(repr=False, compare=False, default=())

    def __post_init__(self) -> None:
        adj = np.asarray(self.adj, dtype=bool)
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)
        object.__setattr__(
            self, "neighbors", tuple(np.flatnonzero(adj[i]) for i in range(self.node_count))
        )

    @property
    def edge_count(self) -> int:
        return int(self.adj.sum()) // 2

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])


def _check_square_symmetric(adj: np.ndarray) -> None:
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError("adjacency must be a square matrix")
    if adj.diagonal().any():
        raise ValueError("self-loops are not allowed")
    if not np.array_equal(adj, adj.T):
        raise ValueError("adjacency must be symmetric")


def is_connected(adj: np.ndarray) -> bool:
    if adj.shape[0] <= 1:
        return True
    n_comp, _ = connected_components(csr_matrix(adj), directed=False)
    return n_comp == 1


def exact_diameter(adj: np.ndarray) -> int:
    """Hop diameter via all-pairs BFS.  Raises on a disconnected graph."""
    n = adj.shape[0]
    if n <= 1:
        return 0
    dist = shortest_path(csr_matrix(adj), method="D", unweighted=True, directed=False)
    if np.isinf(dist).any():
        raise ValueError("graph not connected")
    return int(dist.max())


def graph_from_adjacency(adj: np.ndarray) -> Graph:
    adj = np.asarray(adj, dtype=bool).copy()
    _check_square_symmetric(adj)
    if not is_connected(adj):
        raise ValueError("graph not connected")
    n = adj.shape[0]
    degrees = adj.sum(axis=1)
    return Graph(
        node_count=n,
        adj=adj,
        diameter=exact_diameter(adj),
        max_degree=int(degrees.max()) if n else 0,
    )


def graph_from_edges(n: int, edges) -> Graph:
    if n < 1:
        raise ValueError("node count must be >= 1")
    adj = np.zeros((n, n), dtype=bool)
    for u, v in edges:
        if u == v:
            raise ValueError("self-loops are not allowed")
        adj[u, v] = adj[v, u] = True
    return graph_from_adjacency(adj)


def build(spec: TopologySpec, rng: np.random.Generator | None = None) -> Graph:
    """Build a connected graph from a topology description.

    ErdosRenyi samples every edge independently and resamples the whole
    graph until it is connected; after ER_RETRY_LIMIT failures it raises.
    """
    if isinstance(spec, Complete):
        if spec.n < 1:
            raise ValueError("node count must be >= 1")
        adj = np.ones((spec.n, spec.n), dtype=bool)
        np.fill_diagonal(adj, False)
        diameter = 1 if spec.n > 1 else 0
        return Graph(spec.n, adj, diameter, spec.n - 1 if spec.n > 1 else 0)

    if isinstance(spec, Mesh2D):
        r, c = spec.rows, spec.cols
        if r < 1 or c < 1:
            raise ValueError("mesh dimensions must be >= 1")
        n = r * c
        adj = np.zeros((n, n), dtype=bool)
        for i in range(r):
            for j in range(c):
                a = i * c + j
                if j + 1 < c:
                    adj[a, a + 1] = adj[a + 1, a] = True
                if i + 1 < r:
                    adj[a, a + c] = adj[a + c, a] = True
        degrees = adj.sum(axis=1)
        return Graph(n, adj, (r - 1) + (c - 1), int(degrees.max()) if n > 1 else 0)

    if isinstance(spec, ErdosRenyi):
        n = spec.n
        if n < 1:
            raise ValueError("node count must be >= 1")
        p = spec.edge_probability
        if p is None:
            p = default_edge_probability(n)
        if not (0.0 <= p <= 1.0):
            raise ValueError("edge probability must lie in [0, 1]")
        if rng is None:
            rng = np.random.default_rng()
        iu = np.triu_indices(n, k=1)
        for _ in range(ER_RETRY_LIMIT):
            adj = np.zeros((n, n), dtype=bool)
            mask = rng.random(len(iu[0])) < p
            adj[iu[0][mask], iu[1][mask]] = True
            adj |= adj.T
            if is_connected(adj):
                degrees = adj.sum(axis=1)
                return Graph(n, adj, exact_diameter(adj), int(degrees.max()) if n > 1 else 0)
        raise ValueError("connectivity retry limit exceeded")

    raise TypeError(f"unknown topology spec: {spec!r}")


@dataclass(frozen=True)
class LevelAssignment:
    """Per-node voting levels.

    values holds one entry per node in 1..level_count.  A level may be
    unused (count zero); level_count fixes the slot schedule width K.
    """

    values: np.ndarray
    level_count: int

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.int64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.level_count < 1:
            raise ValueError("level count must be >= 1")
        if values.ndim != 1 or len(values) < 1:
            raise ValueError("values must be a non-empty 1D array")
        if values.min() < 1 or values.max() > self.level_count:
            raise ValueError("levels must lie in 1..level_count")

    @property
    def node_count(self) -> int:
        return len(self.values)

    def level_counts(self) -> np.ndarray:
        """Count of nodes per level, index 0 holding level 1."""
        return np.bincount(self.values, minlength=self.level_count + 1)[1:]

    def plurality_level(self) -> int | None:
        """The unique most common level, or None on a tie."""
        counts = self.level_counts()
        top = counts.max()
        winners = np.flatnonzero(counts == top)
        if len(winners) != 1:
            return None
        return int(winners[0]) + 1


def spots(graph: Graph, values: np.ndarray) -> list[list[int]]:
    """Maximal connected same-value node sets, ordered by smallest member.

    Every node belongs to exactly one spot; merging two adjacent spots
    would always mix two distinct values.
    """
    values = np.asarray(values)
    if len(values) != graph.node_count:
        raise ValueError("values length must match node count")
    seen = np.zeros(graph.node_count, dtype=bool)
    out: list[list[int]] = []
    for start in range(graph.node_count):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        frontier = [start]
        while frontier:
            u = frontier.pop()
            for v in graph.neighbors[u]:
                v = int(v)
                if not seen[v] and values[v] == values[start]:
                    seen[v] = True
                    comp.append(v)
                    frontier.append(v)
        out.append(sorted(comp))
    return out
