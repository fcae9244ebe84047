"""Broadcast and leader election on top of Compete."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compete import CompeteConfig, CompeteResult, compete
from .graph import Graph
from .graphs import GraphStats, compute_stats
from .mis import log_n


@dataclass
class BroadcastResult:
    outputs: list                 # per node: the message bytes or None
    success: bool
    run: CompeteResult

    @property
    def uninformed(self):
        return [v for v, m in enumerate(self.outputs) if m is None]


def broadcast(graph: Graph, source: int, message: bytes, seed: int = 0,
              stats: GraphStats | None = None, config: CompeteConfig | None = None,
              audit=True) -> BroadcastResult:
    if not 0 <= source < graph.n:
        raise ValueError("source outside the graph")
    run = compete(graph, {source: 0}, seed, stats, config, msg_bits=8 * len(message), audit=audit)
    outputs = [message if r == 0 else None for r in run.held]
    ok = run.success and all(m == message for m in outputs)
    return BroadcastResult(outputs, ok, run)


@dataclass
class ElectionOutcome:
    leader: list                  # per node: elected node id, or None
    candidates: list
    ranks: dict                   # candidate -> 64-bit rank
    success: bool
    attempts: int
    run: CompeteResult | None

    @property
    def expected_leader(self):
        """The candidate with the largest (rank, node) pair."""
        if not self.candidates:
            return None
        return max(self.candidates, key=lambda v: (self.ranks[v], v))


def nominate(n: int, stats_n: int, kappa_c: float, rng: np.random.Generator) -> np.ndarray:
    p = min(1.0, kappa_c * log_n(stats_n) / n)
    return np.flatnonzero(rng.random(n) < p)


def leader_election(graph: Graph, seed: int = 0, stats: GraphStats | None = None,
                    config: CompeteConfig | None = None, kappa_c: float = 2.0,
                    audit=True) -> ElectionOutcome:
    """Self-nomination, fresh 64-bit ranks, then Compete over the candidates.

    An empty candidate set is retried once with doubled ``kappa_c``.
    """
    stats = stats or compute_stats(graph)
    ss = np.random.SeedSequence(seed, spawn_key=(0xE1,))
    rng = np.random.default_rng(ss)
    cand = np.zeros(0, dtype=np.int64)
    attempts = 0
    for k in (kappa_c, 2 * kappa_c):
        attempts += 1
        cand = nominate(graph.n, stats.n, k, rng)
        if len(cand):
            break
    if not len(cand):
        return ElectionOutcome([None] * graph.n, [], {}, False, attempts, None)
    ranks = {int(v): int(r) for v, r in zip(cand, rng.integers(0, 2 ** 64, size=len(cand), dtype=np.uint64))}
    # (rank, id) pairs make the maximum unique
    S = {v: (r, v) for v, r in ranks.items()}
    run = compete(graph, S, seed, stats, config, audit=audit)
    leader = [None if h < 0 else run.keys[h][1] for h in run.held]
    out = ElectionOutcome(leader, sorted(ranks), ranks, False, attempts, run)
    out.success = bool(run.success and all(x == out.expected_leader for x in leader))
    return out
