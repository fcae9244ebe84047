"""Undirected simple graph used as the simulated radio network."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph on nodes ``0..n-1``.

    ``edges`` is an ``(m, 2)`` array with ``u < v`` in every row, sorted and
    without duplicates. ``coords``/``ranges`` are only set for geometric
    instances.
    """

    n: int
    edges: np.ndarray
    coords: np.ndarray | None = None
    ranges: np.ndarray | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("graph needs at least one node")
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(e):
            if e.min() < 0 or e.max() >= self.n:
                raise GraphError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise GraphError("self-loop")
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0) if len(e) else e
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_edges(cls, n, edges, **kw) -> "Graph":
        return cls(n, np.asarray(list(edges), dtype=np.int64).reshape(-1, 2), **kw)

    @classmethod
    def from_networkx(cls, g, name="") -> "Graph":
        nodes = sorted(g.nodes())
        index = {v: i for i, v in enumerate(nodes)}
        edges = [(index[u], index[v]) for u, v in g.edges() if u != v]
        return cls.from_edges(len(nodes), edges, name=name)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 CSR matrix (float32, for BLAS-friendly products)."""
        e = self.edges
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(len(rows), dtype=np.float32)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def neighbors(self) -> list[np.ndarray]:
        a = self.adjacency
        return [a.indices[a.indptr[v]:a.indptr[v + 1]].copy() for v in range(self.n)]

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    @cached_property
    def arcs(self) -> tuple[np.ndarray, np.ndarray]:
        """Both orientations of every edge, as (source, target) arrays."""
        e = self.edges
        return np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]])

    def has_edge(self, u, v) -> bool:
        return bool(np.any(self.neighbors[u] == v))

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(map(tuple, self.edges.tolist()))
        return g

    def hop_distances(self, sources) -> np.ndarray:
        """BFS hop distances from each source; unreachable entries are ``inf``."""
        from scipy.sparse.csgraph import shortest_path

        return shortest_path(self.adjacency, unweighted=True, indices=np.atleast_1d(sources))

    def subgraph_mask(self, keep: np.ndarray) -> sp.csr_matrix:
        """Adjacency restricted to edges with both endpoints in ``keep``."""
        d = sp.diags(keep.astype(np.float32))
        return (d @ self.adjacency @ d).tocsr()

    def same_structure(self, other: "Graph") -> bool:
        return self.n == other.n and np.array_equal(self.edges, other.edges)
