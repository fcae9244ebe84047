"""Exponential-shift clustering restricted to a set of centres.

Every centre draws a shift ``delta ~ Exp(beta)``; each node joins the centre
minimising ``dist(u, v) - delta_v``. :func:`partition_ideal` computes this
centrally; :func:`partition_process` realises it on the radio channel as a
delayed BFS (centre ``v`` starts at phase ``Q - floor(delta_v)``, each wave
front forwards itself with one Decay block per phase).

Ties between centres are broken by larger fractional shift, then lower
centre id, in both variants.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .engine import Engine, Idle
from .graph import Graph
from .graphs import GraphStats
from .mis import DecayParams, decay_block, log_n

# start delays are capped at (CAP_FACTOR / beta) * ln n
CAP_FACTOR = 10.0


class ClusteringError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterConfig:
    j: int | None
    beta: float
    kind: str  # "coarse" | "fine" | "background"

    @classmethod
    def coarse(cls, D):
        return cls(None, max(D, 1) ** -0.5, "coarse")

    @classmethod
    def background(cls, D):
        return cls(None, max(D, 1) ** -0.1, "background")

    @classmethod
    def fine(cls, j):
        return cls(j, 2.0 ** -j, "fine")


def fine_j_range(D: int) -> list[int]:
    """Integers j with ceil(0.01 log2 D) <= j <= ceil(0.1 log2 D); empty for D < 2."""
    if D < 2:
        return []
    lg = math.log2(D)
    return list(range(math.ceil(0.01 * lg), math.ceil(0.1 * lg) + 1))


def delta_cap(beta: float, n: int) -> int:
    return max(1, math.ceil(CAP_FACTOR / beta * math.log(max(n, 2))))


def sample_shifts(rng: np.random.Generator, k: int, beta: float, cap: float | None = None) -> np.ndarray:
    """Exp(beta) by inverse CDF; values above ``cap`` are redrawn."""
    d = -np.log1p(-rng.random(k)) / beta
    if cap is not None:
        over = d > cap
        while over.any():
            d[over] = -np.log1p(-rng.random(int(over.sum()))) / beta
            over = d > cap
    return d


@dataclass
class ShiftAssignment:
    beta: float
    centers: np.ndarray        # sorted centre ids
    shifts: np.ndarray         # (n,) delta for centres, nan elsewhere
    center: np.ndarray         # (n,) assigned centre, -1 if unreached
    hop: np.ndarray            # (n,) hop distance to the assigned centre
    shifted: np.ndarray        # (n,) dist - delta (quantised shift when quantized)
    quantized: bool = False
    incomplete: bool = False
    rounds: int = 0

    @property
    def n(self):
        return len(self.center)

    def members(self) -> dict[int, np.ndarray]:
        return {int(c): np.flatnonzero(self.center == c) for c in np.unique(self.center[self.center >= 0])}

    def radii(self) -> dict[int, int]:
        return {c: int(self.hop[m].max()) for c, m in self.members().items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("node,center,hop_dist,shifted_dist\n")
        for v in range(self.n):
            buf.write(f"{v},{int(self.center[v])},{int(self.hop[v])},{self.shifted[v]:.6f}\n")
        return buf.getvalue()


def _group_adjacency(graph: Graph, group):
    if group is None:
        return graph.adjacency
    e = graph.edges
    same = group[e[:, 0]] == group[e[:, 1]]
    g = Graph(graph.n, e[same])
    return g.adjacency


def center_distances(graph: Graph, centers, group=None) -> np.ndarray:
    """(k, n) hop distances from each centre, optionally only along edges
    whose endpoints share a group label."""
    from scipy.sparse.csgraph import shortest_path

    return shortest_path(_group_adjacency(graph, group), unweighted=True, indices=np.asarray(centers))


def assign(dist: np.ndarray, centers: np.ndarray, shifts: np.ndarray, quantized=False):
    """Pick, per node, the centre with the smallest (dist - shift, -frac, id).

    ``dist`` is (k, n); ``shifts`` is (k,). Returns (centre index into
    ``centers`` or -1, key value).
    """
    whole = np.floor(shifts) if quantized else shifts
    frac = shifts - np.floor(shifts)
    pref = np.lexsort((centers, -frac))  # preferred centres first
    key = dist[pref] - whole[pref][:, None]
    best = np.argmin(key, axis=0)  # first minimum = preferred on ties
    val = key[best, np.arange(dist.shape[1])]
    idx = np.where(np.isfinite(val), pref[best], -1)
    return idx, val


def partition_ideal(graph: Graph, centers, beta: float, rng=None, *, shifts=None,
                    quantized=False, group=None) -> ShiftAssignment:
    centers = np.asarray(sorted(set(int(c) for c in centers)), dtype=np.int64)
    if len(centers) == 0:
        raise ClusteringError("empty centre set")
    if shifts is None:
        shifts = sample_shifts(rng, len(centers), beta)
    else:
        shifts = np.asarray(shifts, dtype=float)
        if len(shifts) != len(centers):
            raise ClusteringError("one shift per centre required")
    dist = center_distances(graph, centers, group)
    idx, val = assign(dist, centers, shifts, quantized)
    reached = idx >= 0
    center = np.where(reached, centers[np.maximum(idx, 0)], -1)
    hop = np.where(reached, dist[np.maximum(idx, 0), np.arange(graph.n)], -1).astype(np.int64)
    full = np.full(graph.n, np.nan)
    full[centers] = shifts
    return ShiftAssignment(beta, centers, full, center, hop, np.where(reached, val, np.inf),
                           quantized, not reached.all())


def sample_center_distances(dist: np.ndarray, beta: float, trials: int, rng, chunk=500) -> np.ndarray:
    """Monte-Carlo hop distance to the assigned centre: (trials, m) for the
    m node columns of ``dist`` (k centres x m nodes)."""
    out = np.empty((trials, dist.shape[1]))
    finite = np.where(np.isfinite(dist), dist, np.inf)
    for s in range(0, trials, chunk):
        t = min(chunk, trials - s)
        d = -np.log1p(-rng.random((t, dist.shape[0]))) / beta
        key = finite[None, :, :] - d[:, :, None]
        best = np.argmin(key, axis=1)
        out[s:s + t] = np.take_along_axis(np.broadcast_to(finite, (t,) + finite.shape),
                                          best[:, None, :], axis=1)[:, 0, :]
    return out


# -- radio realisation ---------------------------------------------------------

def partition_process(eng: Engine, centers: np.ndarray, beta: float, stats: GraphStats,
                      params: DecayParams, tag: str, *, group=None, shifts=None,
                      extra_phases=0):
    """Delayed-BFS clustering on the radio channel.

    ``centers`` is a boolean mask (each centre knows only itself). With
    ``group`` a node accepts wave fronts only from its own group. Returns a
    :class:`ShiftAssignment` with ``quantized=True``.
    """
    n = eng.n
    rng = eng.rng(f"partition:{tag}")
    Q = delta_cap(beta, stats.n)
    delta = np.full(n, np.nan)
    cidx = np.flatnonzero(centers)
    if shifts is None:
        delta[cidx] = sample_shifts(rng, len(cidx), beta, cap=Q)
    else:
        delta[cidx] = np.asarray(shifts, dtype=float)
    whole = np.floor(delta)
    frac = delta - whole
    start = np.where(centers, Q - whole, -1).astype(np.int64)

    center = np.full(n, -1, dtype=np.int64)
    hop = np.full(n, -1, dtype=np.int64)
    arrival = np.full(n, -1, dtype=np.int64)
    listen_group = None if group is None else np.asarray(group)
    phases = Q + 2 + extra_phases
    bits = 64 + 32 + 16

    for t in range(phases):
        # centres whose delay expires now, unless a wave that also arrived now beats them
        own = centers & (start == t) & ((center == -1) | (arrival == t))
        if own.any():
            cur = np.maximum(center, 0)
            better = (center == -1) | (frac > frac[cur]) | ((frac == frac[cur]) & (np.arange(n) < cur))
            take = own & better
            center[take] = np.flatnonzero(take)
            hop[take] = 0
            arrival[take] = t
        front = arrival == t
        if not front.any():
            yield Idle(params.rounds)
            continue
        senders = yield from decay_block(eng, rng, front, params, bits=bits)
        ri, vi = np.nonzero(senders >= 0)
        u = senders[ri, vi]
        ok = center[vi] == -1
        if listen_group is not None:
            ok &= listen_group[vi] == listen_group[u]
        vi, u = vi[ok], u[ok]
        if len(vi) == 0:
            continue
        c = center[u]
        order = np.lexsort((c, -frac[c], vi))
        vi, u, c = vi[order], u[order], c[order]
        first = np.r_[True, vi[1:] != vi[:-1]]
        v_new, u_new, c_new = vi[first], u[first], c[first]
        center[v_new] = c_new
        hop[v_new] = hop[u_new] + 1
        arrival[v_new] = t + 1

    reached = center >= 0
    shifted = np.where(reached, hop - whole[np.maximum(center, 0)], np.inf)
    return ShiftAssignment(beta, cidx, delta, center, hop, shifted, True, not reached.all(),
                           phases * params.rounds)


def partition_radio(graph: Graph, centers, beta: float, stats: GraphStats, seed: int = 0, *,
                    decay_iters: int = 23, shifts=None, group=None, audit=True) -> ShiftAssignment:
    mask = np.zeros(graph.n, dtype=bool)
    mask[list(centers)] = True
    if not mask.any():
        raise ClusteringError("empty centre set")
    eng = Engine(graph, seed, audit=audit)
    params = DecayParams(decay_iters, log_n(stats.n))
    res = eng.run(partition_process(eng, mask, beta, stats, params, "radio", shifts=shifts, group=group))
    if eng.audit_violations:
        raise RuntimeError("channel audit failed")
    return res


def agreement_fraction(a: ShiftAssignment, b: ShiftAssignment) -> float:
    return float(np.mean(a.center == b.center))
