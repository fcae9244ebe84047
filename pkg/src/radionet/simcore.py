"""Per-node synchronous radio network simulator.

Each node runs a :class:`NodeProgram`; in every round it either transmits an
opaque byte string or listens. A listener receives a message only when exactly
one of its neighbours transmits; transmitters hear nothing and collisions are
indistinguishable from silence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import Graph


class StructuralError(ValueError):
    """Inputs that do not match the graph (wrong action count, bad ids)."""


@dataclass(frozen=True)
class Transmit:
    message: bytes


@dataclass(frozen=True)
class Listen:
    pass


LISTEN = Listen()
Action = Transmit | Listen


def step_round(graph: Graph, actions: Sequence[Action]) -> list[bytes | None]:
    """Resolve one round of the radio channel."""
    if len(actions) != graph.n:
        raise StructuralError(f"expected {graph.n} actions, got {len(actions)}")
    received: list[bytes | None] = [None] * graph.n
    for v in range(graph.n):
        if isinstance(actions[v], Transmit):
            continue
        heard = None
        count = 0
        for u in graph.neighbors[v]:
            a = actions[u]
            if isinstance(a, Transmit):
                count += 1
                if count > 1:
                    break
                heard = a.message
        if count == 1:
            received[v] = heard
    return received


def node_ids(n: int, seed: int) -> np.ndarray:
    """64-bit random identifiers, drawn from a stream reserved for ids."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xD1,)))
    return rng.integers(0, 2**64, size=n, dtype=np.uint64)


def node_rngs(n: int, seed: int) -> list[np.random.Generator]:
    ss = np.random.SeedSequence(seed, spawn_key=(0xA0,))
    return [np.random.default_rng(s) for s in ss.spawn(n)]


class NodeProgram:
    """A per-node protocol state machine.

    ``start`` is called once before round 0; ``step`` receives the round
    index (as seen by this program) and what the node heard in its own
    previous round, and returns the next action. ``output`` is the
    declared terminal output (``None`` until the program declares one).
    """

    output = None

    def start(self, node: int, node_id: int, rng: np.random.Generator) -> None:
        self.node = node
        self.node_id = node_id
        self.rng = rng

    def step(self, t: int, received: bytes | None) -> Action:
        raise NotImplementedError

    def finish(self, received: bytes | None) -> None:
        """Outcome of the program's last round (no further action follows)."""


class Silent(NodeProgram):
    def step(self, t, received):
        return LISTEN


class _Multiplexed(NodeProgram):
    def __init__(self, main: NodeProgram, background: NodeProgram):
        self.main = main
        self.background = background
        self._last = [None, None]
        self._rounds = [0, 0]

    def start(self, node, node_id, rng):
        super().start(node, node_id, rng)
        # sub-programs get independent child streams
        a, b = np.random.SeedSequence(int(rng.integers(2**63))).spawn(2)
        self.main.start(node, node_id, np.random.default_rng(a))
        self.background.start(node, node_id, np.random.default_rng(b))

    def step(self, t, received):
        # deliver what the previous round produced to whoever acted in it
        if t > 0:
            self._last[(t - 1) % 2] = received
        which = t % 2
        prog = self.main if which == 0 else self.background
        action = prog.step(self._rounds[which], self._last[which])
        self._rounds[which] += 1
        return action

    def finish(self, received):
        t = sum(self._rounds)
        if t > 0:
            self._last[(t - 1) % 2] = received
        self.main.finish(self._last[0])
        self.background.finish(self._last[1])

    @property
    def output(self):
        return self.main.output

    @property
    def sub_rounds(self) -> tuple[int, int]:
        return tuple(self._rounds)


def multiplex(main: NodeProgram, background: NodeProgram) -> NodeProgram:
    """Run ``main`` on even rounds and ``background`` on odd rounds."""
    return _Multiplexed(main, background)


@dataclass
class RoundRecord:
    actions: list[bytes | None]
    received: list[bytes | None]


@dataclass
class Trace:
    n: int
    seed: int
    rounds: list[RoundRecord] = field(default_factory=list)
    outputs: list = field(default_factory=list)
    max_payload_bits: int = 0

    def __len__(self):
        return len(self.rounds)

    def to_jsonl(self) -> str:
        lines = []
        for t, r in enumerate(self.rounds):
            lines.append(json.dumps({
                "round": t,
                "actions": [None if a is None else a.hex() for a in r.actions],
                "received": [None if m is None else m.hex() for m in r.received],
            }, separators=(",", ":")))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str, n: int, seed: int = 0) -> "Trace":
        tr = cls(n=n, seed=seed)
        for line in text.splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            unhex = lambda xs: [None if x is None else bytes.fromhex(x) for x in xs]
            tr.rounds.append(RoundRecord(unhex(row["actions"]), unhex(row["received"])))
        return tr


def run(graph: Graph, programs: Sequence[NodeProgram], max_rounds: int, seed: int) -> Trace:
    """Advance all programs in lock-step for ``max_rounds`` rounds."""
    if len(programs) != graph.n:
        raise StructuralError(f"expected {graph.n} programs, got {len(programs)}")
    if max_rounds < 0:
        raise StructuralError("max_rounds must be >= 0")
    ids = node_ids(graph.n, seed)
    rngs = node_rngs(graph.n, seed)
    for v, p in enumerate(programs):
        p.start(v, int(ids[v]), rngs[v])
    trace = Trace(n=graph.n, seed=seed)
    last: list[bytes | None] = [None] * graph.n
    for t in range(max_rounds):
        actions = [p.step(t, last[v]) for v, p in enumerate(programs)]
        for a in actions:
            if not isinstance(a, (Transmit, Listen)):
                raise StructuralError(f"round {t}: program returned {a!r}")
        last = step_round(graph, actions)
        tx = [a.message if isinstance(a, Transmit) else None for a in actions]
        for m in tx:
            if m is not None:
                trace.max_payload_bits = max(trace.max_payload_bits, 8 * len(m))
        trace.rounds.append(RoundRecord(tx, last))
    for v, p in enumerate(programs):
        p.finish(last[v] if max_rounds else None)
    trace.outputs = [p.output for p in programs]
    return trace


def replay_violations(graph: Graph, trace: Trace) -> list[tuple[int, int]]:
    """(round, node) pairs whose recorded reception breaks the channel rule."""
    bad = []
    for t, r in enumerate(trace.rounds):
        for v in range(graph.n):
            senders = [u for u in graph.neighbors[v] if r.actions[u] is not None]
            if r.actions[v] is None and len(senders) == 1:
                expect = r.actions[senders[0]]
            else:
                expect = None
            if r.received[v] != expect:
                bad.append((t, v))
    return bad
