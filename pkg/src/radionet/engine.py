"""Block engine: the radio channel evaluated many rounds at a time.

Protocols are written as generator *processes* over all nodes at once. A
process yields

* :class:`Block` -- ``R`` consecutive rounds whose transmit pattern is fixed
  when the block starts; the engine sends back an ``(R, n)`` array with the
  index of the single neighbour each node heard (``-1`` for nothing);
* :class:`Idle` -- ``R`` silent rounds;
* :class:`Spawn` -- time-multiplex two sub-processes in the caller's slots
  (main on even, background on odd), each for ``length`` rounds.

Every process owns an affine slice ``off + stride * k`` of the global
timeline, so nested multiplexing is exact at round granularity. Blocks are
simulated in order of their global start round. The only state shared
between processes is each node's best known rank; writes to it are
timestamped with the reception round and become visible to any block that
starts later.

Per-node locality is a discipline of the process code: a node's transmit
decision may only use its own state and what it heard.
"""

from __future__ import annotations

import heapq
import itertools
import json
import zlib
from dataclasses import dataclass, field
from typing import Generator

import numpy as np

from .graph import Graph
from . import simcore


@dataclass
class Block:
    transmit: np.ndarray
    # shared-slot update: a listener v that hears u adopts rank[u] when
    # rank[u] >= 0 and (group is None or listen_group[v] == group[u])
    rank: np.ndarray | None = None
    group: np.ndarray | None = None
    listen_group: np.ndarray | None = None
    bits: int = 1


@dataclass
class Idle:
    rounds: int


@dataclass
class Spawn:
    main: Generator
    background: Generator
    length: int


_DENSE: dict = {}


def _dense(graph: Graph):
    """Dense adjacency for small dense graphs (BLAS beats sparse products there)."""
    key = id(graph)
    if key not in _DENSE:
        ok = graph.n <= 2048 and 2 * graph.m * 16 >= graph.n * graph.n
        _DENSE.clear()
        _DENSE[key] = (graph, graph.adjacency.toarray().astype(np.float64) if ok else None)
    return _DENSE[key][1]


def resolve_block(graph: Graph, transmit: np.ndarray) -> np.ndarray:
    """Sender heard by every node in every round of the block (-1 if none)."""
    R, n = transmit.shape
    senders = np.full((R, n), -1, dtype=np.int64)
    rows = np.flatnonzero(transmit.any(axis=1))
    if len(rows) == 0:
        return senders
    tx = transmit[rows]
    a = _dense(graph)
    if a is None:
        a = graph.adjacency
    tf = tx.T.astype(np.float64)
    counts = (a @ tf).T
    idsum = (a @ (tf * (np.arange(n, dtype=np.float64) + 1.0)[:, None])).T
    ok = (counts == 1.0) & ~tx
    senders[rows] = np.where(ok, np.rint(idsum).astype(np.int64) - 1, -1)
    return senders


class Auditor:
    """Re-derives every block's receptions by scattering each transmission
    along the transmitter's edge list. For graphs denser than half the
    complete graph it scatters along non-edges and subtracts from the
    per-round totals instead."""

    def __init__(self, graph: Graph):
        self.graph = graph
        n = graph.n
        src, dst = graph.arcs
        self.complement = 2 * graph.m > n * (n - 1) // 2
        if self.complement:
            adj = graph.adjacency.toarray().astype(bool)
            np.fill_diagonal(adj, True)
            src, dst = np.nonzero(~adj)
        order = np.argsort(src, kind="stable")
        self.dst = dst[order]
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=self.indptr[1:])
        self.rounds_checked = 0
        self.violations = 0

    def _scatter(self, transmit):
        R, n = transmit.shape
        ri, ui = np.nonzero(transmit)
        deg = self.indptr[ui + 1] - self.indptr[ui]
        rep = np.repeat(np.arange(len(ui)), deg)
        # position of each expanded entry inside its transmitter's edge list
        first = np.repeat(np.cumsum(deg) - deg, deg)
        arc = self.indptr[ui][rep] + (np.arange(len(rep)) - first)
        key = ri[rep] * n + self.dst[arc]
        counts = np.bincount(key, minlength=R * n).reshape(R, n)
        ssum = np.bincount(key, weights=ui[rep], minlength=R * n).reshape(R, n)
        return counts, ssum

    def check(self, transmit: np.ndarray, senders: np.ndarray) -> None:
        R, n = transmit.shape
        self.rounds_checked += R
        counts, ssum = self._scatter(transmit)
        if self.complement:
            ids = np.arange(n)
            t = transmit.astype(np.int64)
            counts = t.sum(axis=1, keepdims=True) - t - counts
            ssum = (t @ ids)[:, None] - t * ids - ssum
        expect = np.where((counts == 1) & ~transmit, ssum.astype(np.int64), -1)
        self.violations += int(np.count_nonzero((expect != senders).any(axis=1)))


@dataclass
class BlockTrace:
    """Recorded blocks: global round indices, transmit rows, sender rows."""

    n: int
    chunks: list = field(default_factory=list)

    def rounds(self):
        for g, tx, snd in self.chunks:
            for r in range(len(g)):
                yield int(g[r]), tx[r], snd[r]

    def to_jsonl(self) -> str:
        out = []
        for g, tx, snd in sorted(self.rounds(), key=lambda x: x[0]):
            out.append(json.dumps({
                "round": g,
                "transmitters": np.flatnonzero(tx).tolist(),
                "receptions": [[int(v), int(snd[v])] for v in np.flatnonzero(snd >= 0)],
            }, separators=(",", ":")))
        return "\n".join(out) + ("\n" if out else "")

    def replay_violations(self, graph: Graph) -> int:
        """Count rounds whose receptions disagree with the per-node channel rule."""
        bad = 0
        for _, tx, snd in self.rounds():
            actions = [simcore.Transmit(int(v).to_bytes(4, "big")) if tx[v] else simcore.LISTEN
                       for v in range(graph.n)]
            got = simcore.step_round(graph, actions)
            expect = [-1 if m is None else int.from_bytes(m, "big") for m in got]
            if not np.array_equal(np.asarray(expect), snd):
                bad += 1
        return bad


@dataclass(eq=False)
class _Leaf:
    gen: Generator
    off: int
    stride: int
    limit: int | None
    depth: int
    local: int = 0
    send: object = None

    def start(self) -> int:
        return self.off + self.stride * self.local


class Engine:
    """Runs processes over one graph with one seed.

    ``best`` is the per-node shared message slot (a rank, ``-1`` = none).
    When ``target`` is given the engine records, for every node, the first
    round at which it held that rank; with ``stop_on_agreement`` the run
    ends as soon as every node holds it.
    """

    def __init__(self, graph: Graph, seed: int, *, audit: bool = True, record: bool = False,
                 best: np.ndarray | None = None, target: int | None = None,
                 stop_on_agreement: bool = False):
        self.graph = graph
        self.n = graph.n
        self.seed = seed
        self.auditor = Auditor(graph) if audit else None
        self.trace = BlockTrace(graph.n) if record else None
        self.best = np.full(graph.n, -1, dtype=np.int64) if best is None else best.astype(np.int64).copy()
        self.target = target
        self.stop_on_agreement = stop_on_agreement
        self.first_hold = np.full(graph.n, np.iinfo(np.int64).max, dtype=np.int64)
        if target is not None:
            self.first_hold[self.best == target] = -1
        self.agreement_round: int | None = None
        self.now = 0
        self.rounds_used = 0
        self.max_payload_bits = 0
        self.blocks_simulated = 0
        self._pending: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self._seq = itertools.count()
        self._check_agreement()

    def rng(self, tag: str) -> np.random.Generator:
        """Independent stream for one protocol component, keyed by ``tag``."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(zlib.crc32(tag.encode()),))
        return np.random.default_rng(ss)

    # -- shared slot -------------------------------------------------------

    def _apply_events(self, before: int) -> None:
        keep = []
        for t, v, r in self._pending:
            m = t < before
            if m.any():
                np.maximum.at(self.best, v[m], r[m])
                if self.target is not None:
                    hit = m & (r == self.target)
                    np.minimum.at(self.first_hold, v[hit], t[hit])
            if not m.all():
                keep.append((t[~m], v[~m], r[~m]))
        self._pending = keep
        self._check_agreement()

    def inject(self, nodes, ranks, at: int) -> None:
        """Nodes hold ``ranks`` from global round ``at`` on (input arrival).

        Only valid for ``at <= now + 1`` so no later event is applied early.
        """
        nodes = np.asarray(nodes, dtype=np.int64)
        self._pending.append((np.full(len(nodes), at - 1, dtype=np.int64), nodes,
                              np.asarray(ranks, dtype=np.int64)))
        self._apply_events(at)

    def _check_agreement(self) -> None:
        if self.target is not None and self.agreement_round is None:
            if np.all(self.first_hold < np.iinfo(np.int64).max):
                self.agreement_round = int(self.first_hold.max()) + 1

    # -- scheduling --------------------------------------------------------

    def run(self, process: Generator, limit: int | None = None):
        """Drive ``process`` (and everything it spawns) to completion.

        Returns the root process's return value, or ``None`` if it was cut
        off by ``limit`` or by agreement.
        """
        root = _Leaf(process, 0, 1, limit, 0)
        result = None
        heap: list = []
        self._push(heap, root)
        while heap:
            g, _, _, leaf = heapq.heappop(heap)
            self._apply_events(g)
            if self.stop_on_agreement and self.agreement_round is not None:
                break
            self.now = g
            try:
                item = leaf.gen.send(leaf.send)
            except StopIteration as stop:
                if leaf is root:
                    result = stop.value
                continue
            leaf.send = None
            if isinstance(item, Block):
                self._run_block(leaf, item)
            elif isinstance(item, Idle):
                r = item.rounds if leaf.limit is None else min(item.rounds, leaf.limit - leaf.local)
                if r > 0:
                    self.rounds_used = max(self.rounds_used, leaf.off + leaf.stride * (leaf.local + r - 1) + 1)
                    leaf.local += r
            elif isinstance(item, Spawn):
                base = leaf.local
                for k, gen in enumerate((item.main, item.background)):
                    length = item.length
                    if leaf.limit is not None:
                        # children may not outlive the parent's slots
                        length = min(length, max(0, -(-(leaf.limit - base - k) // 2)))
                    child = _Leaf(gen, leaf.off + leaf.stride * (base + k), 2 * leaf.stride,
                                  length, leaf.depth + 1)
                    self._push(heap, child)
                leaf.local += 2 * item.length
            else:
                raise TypeError(f"process yielded {item!r}")
            self._push(heap, leaf)
        for _, _, _, leaf in heap:
            leaf.gen.close()
        self._apply_events(np.iinfo(np.int64).max)
        return result

    def _push(self, heap, leaf: _Leaf) -> None:
        if leaf.limit is not None and leaf.local >= leaf.limit:
            leaf.gen.close()
            return
        heapq.heappush(heap, (leaf.start(), -leaf.depth, next(self._seq), leaf))

    def _run_block(self, leaf: _Leaf, block: Block) -> None:
        tx = block.transmit
        R = tx.shape[0]
        if leaf.limit is not None:
            R = min(R, leaf.limit - leaf.local)
            tx = tx[:R]
        if R <= 0:
            leaf.send = np.full((0, self.n), -1, dtype=np.int64)
            return
        senders = resolve_block(self.graph, tx)
        glob = leaf.off + leaf.stride * (leaf.local + np.arange(R, dtype=np.int64))
        self.rounds_used = max(self.rounds_used, int(glob[-1]) + 1)
        self.blocks_simulated += 1
        if tx.any():
            self.max_payload_bits = max(self.max_payload_bits, block.bits)
        if self.auditor is not None:
            self.auditor.check(tx, senders)
        if self.trace is not None:
            self.trace.chunks.append((glob, tx.copy(), senders.copy()))
        if block.rank is not None:
            ri, vi = np.nonzero(senders >= 0)
            u = senders[ri, vi]
            r = block.rank[u]
            ok = r >= 0
            if block.group is not None:
                ok &= block.listen_group[vi] == block.group[u]
            if ok.any():
                self._pending.append((glob[ri[ok]], vi[ok], r[ok]))
        leaf.local += R
        leaf.send = senders

    @property
    def rounds_audited(self) -> int:
        return 0 if self.auditor is None else self.auditor.rounds_checked

    @property
    def audit_violations(self) -> int:
        return 0 if self.auditor is None else self.auditor.violations
