"""Graph generators, loaders and parameter estimation (n, D, alpha)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .graph import Graph, GraphError

EXACT_ALPHA_MAX_N = 40
EXACT_DIAMETER_MAX_N = 10_000


class ParseError(GraphError):
    def __init__(self, path, line, msg):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


# -- geometric classes -------------------------------------------------------

def _points(n, area_side, rng, dim=2):
    return rng.uniform(0.0, area_side, size=(n, dim))


def _pairs(dist, mask):
    iu, ju = np.triu_indices(len(dist), k=1)
    keep = mask[iu, ju]
    return np.stack([iu[keep], ju[keep]], axis=1)


def udg_from_points(points, radius=1.0, metric="euclidean", name="udg") -> Graph:
    """Edge iff distance <= radius. ``metric`` is any scipy ``cdist`` metric
    (``cityblock``/``euclidean``/``chebyshev`` give the l1/l2/l-inf unit ball graphs)."""
    pts = np.asarray(points, dtype=float)
    d = cdist(pts, pts, metric=metric)
    return Graph(len(pts), _pairs(d, d <= radius), coords=pts, name=name)


def gen_udg(n, area_side, rng, metric="euclidean") -> Graph:
    return udg_from_points(_points(n, area_side, rng), 1.0, metric, name=f"udg-{n}")


def gen_unit_ball(n, area_side, rng, dim=2, p=2) -> Graph:
    metric = {1: "cityblock", 2: "euclidean", math.inf: "chebyshev"}[p]
    pts = _points(n, area_side, rng, dim)
    return udg_from_points(pts, 1.0, metric, name=f"ubg-l{p}-{n}")


def quasi_udg_from_points(points, r, R, edge_prob_in_annulus, rng) -> Graph:
    if r > R:
        raise GraphError("quasi-UDG needs r <= R")
    pts = np.asarray(points, dtype=float)
    d = cdist(pts, pts)
    coin = rng.random(d.shape)
    coin = np.triu(coin, 1) + np.triu(coin, 1).T  # one coin per unordered pair
    annulus = (d >= r) & (d <= R) & (coin < edge_prob_in_annulus)
    return Graph(len(pts), _pairs(d, (d < r) | annulus), coords=pts, name="quasi-udg")


def gen_quasi_udg(n, area_side, r, R, edge_prob_in_annulus, rng) -> Graph:
    pts = _points(n, area_side, rng)
    return quasi_udg_from_points(pts, r, R, edge_prob_in_annulus, rng)


def geometric_radio_from_points(points, ranges) -> Graph:
    """Undirected geometric radio network: keep an edge only when both ends reach each other."""
    pts = np.asarray(points, dtype=float)
    rv = np.asarray(ranges, dtype=float)
    if np.any(rv <= 0):
        raise GraphError("ranges must be positive")
    d = cdist(pts, pts)
    mutual = np.minimum.outer(rv, rv)
    return Graph(len(pts), _pairs(d, d <= mutual), coords=pts, ranges=rv, name="geo-radio")


def gen_geometric_radio(n, area_side, range_sampler, rng) -> Graph:
    pts = _points(n, area_side, rng)
    return geometric_radio_from_points(pts, range_sampler(rng, n))


def grid_udg(side, radius=1.0, rows=None) -> Graph:
    """Unit-spaced ``rows x side`` lattice as a UDG. radius 1 gives the
    4-neighbour grid (D = 2(side-1)); radius sqrt(2) the king graph (D = side-1)."""
    rows = side if rows is None else rows
    xs, ys = np.meshgrid(np.arange(side, dtype=float), np.arange(rows, dtype=float))
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
    g = udg_from_points(pts, radius + 1e-9)
    return Graph(g.n, g.edges, coords=pts, name=f"grid-{rows}x{side}-r{radius:.3g}")


# -- general graphs ----------------------------------------------------------

def gen_gnp(n, p, rng) -> Graph:
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return Graph(n, np.stack([iu[keep], ju[keep]], axis=1), name=f"gnp-{n}-{p:g}")


def path_graph(n) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)], name=f"path-{n}")


def cycle_graph(n) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)], name=f"cycle-{n}")


def complete_graph(n) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)], name=f"clique-{n}")


def star_graph(leaves) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)], name=f"star-{leaves}")


def empty_graph(n) -> Graph:
    return Graph(n, np.zeros((0, 2), dtype=np.int64), name=f"empty-{n}")


def star_of_paths(arms, arm_length) -> Graph:
    """Hub 0 with ``arms`` disjoint paths of ``arm_length`` nodes hanging off it.
    D = 2 * arm_length, alpha ~ arms * ceil(arm_length / 2)."""
    edges = []
    v = 1
    for _ in range(arms):
        prev = 0
        for _ in range(arm_length):
            edges.append((prev, v))
            prev = v
            v += 1
    return Graph.from_edges(v, edges, name=f"star-of-paths-{arms}x{arm_length}")


def connected_gnp(n, p, rng, tries=1000) -> Graph:
    for _ in range(tries):
        g = gen_gnp(n, p, rng)
        if is_connected(g):
            return g
    raise GraphError(f"no connected G({n},{p}) in {tries} tries")


def connected_udg(n, area_side, rng, tries=1000) -> Graph:
    for _ in range(tries):
        g = gen_udg(n, area_side, rng)
        if is_connected(g):
            return g
    raise GraphError(f"no connected UDG({n},{area_side}) in {tries} tries")


# -- file formats ------------------------------------------------------------

def save_edge_list(graph: Graph, path) -> None:
    with open(path, "w") as f:
        f.write(f"# n {graph.n}\n")
        for u, v in graph.edges.tolist():
            f.write(f"{u} {v}\n")


def load_edge_list(path, n=None) -> Graph:
    """``u v`` per line; ``# n <count>`` header optional (else max id + 1)."""
    path = Path(path)
    edges = []
    declared = None
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "n":
                try:
                    declared = int(parts[1])
                except ValueError:
                    raise ParseError(path, lineno, f"bad node count {parts[1]!r}") from None
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(path, lineno, f"expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(path, lineno, f"non-integer node id in {line!r}") from None
        if u == v:
            raise ParseError(path, lineno, f"self-loop on {u}")
        if u < 0 or v < 0:
            raise ParseError(path, lineno, "negative node id")
        if declared is not None and max(u, v) >= declared:
            raise ParseError(path, lineno, f"node id {max(u, v)} out of range for n={declared}")
        edges.append((u, v))
    count = n or declared or (max(max(e) for e in edges) + 1 if edges else 0)
    if count < 1:
        raise ParseError(path, 0, "empty graph")
    if n is not None and edges and max(max(e) for e in edges) >= n:
        raise ParseError(path, 0, f"node id out of range for n={n}")
    return Graph.from_edges(count, edges, name=path.stem)


def save_geometric_json(graph: Graph, path, r=1.0, R=None) -> None:
    if graph.coords is None:
        raise GraphError("graph has no embedding")
    doc = {
        "dim": int(graph.coords.shape[1]),
        "points": graph.coords.tolist(),
        "r": r,
        "R": r if R is None else R,
        "ranges": None if graph.ranges is None else graph.ranges.tolist(),
        "edges": graph.edges.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_geometric_json(path) -> Graph:
    """Rebuild from coordinates. Ranges give the mutual-reach rule; otherwise
    edges below ``r`` are forced and above ``R`` forbidden. An explicit
    ``edges`` list (needed when r < R) is checked against those rules."""
    try:
        doc = json.loads(Path(path).read_text())
        pts = np.asarray(doc["points"], dtype=float).reshape(-1, int(doc["dim"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise GraphError(f"{path}: malformed geometric JSON ({e})") from None
    if doc.get("ranges"):
        g = geometric_radio_from_points(pts, doc["ranges"])
        if doc.get("edges") is not None and not np.array_equal(
                g.edges, Graph.from_edges(len(pts), doc["edges"]).edges):
            raise GraphError("edges disagree with ranges")
        return g
    r = float(doc.get("r", 1.0))
    R = float(doc.get("R") or r)
    if r > R:
        raise GraphError("r must be <= R")
    d = cdist(pts, pts)
    if doc.get("edges") is None:
        if r < R:
            raise GraphError("quasi-UDG with r < R needs an explicit edge list")
        return Graph(len(pts), _pairs(d, d <= r), coords=pts)
    g = Graph.from_edges(len(pts), doc["edges"], coords=pts)
    du = d[g.edges[:, 0], g.edges[:, 1]] if g.m else np.zeros(0)
    if np.any(du > R + 1e-12):
        raise GraphError("edge longer than R")
    forced = _pairs(d, d < r)
    have = {tuple(e) for e in g.edges.tolist()}
    if any(tuple(e) not in have for e in forced.tolist()):
        raise GraphError("missing an edge shorter than r")
    return g


# -- parameters --------------------------------------------------------------

@dataclass(frozen=True)
class GraphStats:
    n: int
    D: int
    alpha: int
    alpha_mode: str = "greedy"
    diameter_exact: bool = True
    connected: bool = True

    def inflate(self, factor: float) -> "GraphStats":
        """Over-estimates handed to protocols (n, D, alpha all scaled)."""
        if factor == 1:
            return self
        return GraphStats(math.ceil(self.n * factor), math.ceil(self.D * factor),
                          math.ceil(self.alpha * factor), self.alpha_mode,
                          self.diameter_exact, self.connected)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def components(graph: Graph) -> np.ndarray:
    from scipy.sparse.csgraph import connected_components

    return connected_components(graph.adjacency, directed=False)[1]


def is_connected(graph: Graph) -> bool:
    return graph.n == 1 or len(np.unique(components(graph))) == 1


def eccentricities(graph: Graph, sources=None, chunk=256) -> np.ndarray:
    """Max finite hop distance from each source (BFS, chunked to bound memory)."""
    src = np.arange(graph.n) if sources is None else np.asarray(sources)
    out = np.zeros(len(src), dtype=np.int64)
    for s in range(0, len(src), chunk):
        d = graph.hop_distances(src[s:s + chunk])
        d[~np.isfinite(d)] = -1
        out[s:s + chunk] = d.max(axis=1)
    return out


def diameter(graph: Graph, rng=None, samples=16) -> tuple[int, bool]:
    """Largest finite hop distance. Exact by all-pairs BFS up to 10^4 nodes,
    else the best double-sweep lower bound over sampled start nodes."""
    if graph.n <= EXACT_DIAMETER_MAX_N:
        return int(eccentricities(graph).max()), True
    rng = rng or np.random.default_rng(0)
    best = 0
    for s in rng.choice(graph.n, size=min(samples, graph.n), replace=False):
        d = graph.hop_distances([s])[0]
        d[~np.isfinite(d)] = -1
        far = int(np.argmax(d))
        best = max(best, int(eccentricities(graph, [far])[0]))
    return best, False


def greedy_independent_set(graph: Graph, active=None) -> list[int]:
    """Minimum-degree greedy MIS; size >= n / (Delta + 1)."""
    alive = np.ones(graph.n, bool) if active is None else np.asarray(active, bool).copy()
    deg = np.array([np.count_nonzero(alive[graph.neighbors[v]]) for v in range(graph.n)])
    chosen = []
    while alive.any():
        cand = np.flatnonzero(alive)
        v = int(cand[np.argmin(deg[cand])])
        chosen.append(v)
        drop = [v] + [u for u in graph.neighbors[v] if alive[u]]
        for u in drop:
            if alive[u]:
                alive[u] = False
                for w in graph.neighbors[u]:
                    deg[w] -= 1
    return sorted(chosen)


def exact_alpha(graph: Graph, nodes=None) -> int:
    """Independence number by branch and bound over bitmasks (small graphs)."""
    idx = list(range(graph.n)) if nodes is None else list(nodes)
    if len(idx) > EXACT_ALPHA_MAX_N:
        raise ValueError(f"exact alpha refused for {len(idx)} > {EXACT_ALPHA_MAX_N} nodes")
    pos = {v: i for i, v in enumerate(idx)}
    nbr = [0] * len(idx)
    for v in idx:
        for u in graph.neighbors[v]:
            if int(u) in pos:
                nbr[pos[v]] |= 1 << pos[int(u)]
    best = 0

    def search(mask, size):
        nonlocal best
        if mask == 0:
            best = max(best, size)
            return
        if size + mask.bit_count() <= best:
            return
        # branch on the vertex of maximum degree inside mask
        v, dv = -1, -1
        m = mask
        while m:
            low = m & -m
            i = low.bit_length() - 1
            d = (nbr[i] & mask).bit_count()
            if d > dv:
                v, dv = i, d
            m ^= low
        if dv == 0:
            best = max(best, size + mask.bit_count())
            return
        search(mask & ~(1 << v) & ~nbr[v], size + 1)
        search(mask & ~(1 << v), size)

    search((1 << len(idx)) - 1, 0)
    return best


def compute_stats(graph: Graph, alpha_mode="greedy") -> GraphStats:
    if alpha_mode == "exact":
        alpha = exact_alpha(graph)
    elif alpha_mode == "greedy":
        alpha = len(greedy_independent_set(graph))
    else:
        raise ValueError(f"unknown alpha_mode {alpha_mode!r}")
    D, exact = diameter(graph)
    return GraphStats(graph.n, D, alpha, alpha_mode, exact, is_connected(graph))
