"""Maximal independent set in radio networks.

Decay, EstimateEffectiveDegree and the radio adaptation of the
desire-level MIS. Also holds exact probability oracles for calibration, an
MIS checker and a LOCAL-model run of the desire-level algorithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from . import simcore
from .engine import Block, Engine, Idle
from .graph import Graph
from .graphs import GraphStats

HIGH = "HIGH"
LOW = "LOW"

# receptions needed, as a fraction of C * log n, for a HIGH verdict
EED_HEARD_DIVISOR = 33


def log_n(n: int) -> int:
    """ceil(log2 n), at least 1."""
    return max(1, math.ceil(math.log2(max(n, 2))))


@dataclass(frozen=True)
class MisConstants:
    """Defaults: c as given for the outer-round count (13 c log n); C and
    decay_iters from :func:`calibrate_C` / :func:`calibrate_decay_iters` at n = 256."""

    c: int = 4
    C: int = 34
    decay_iters: int = 23


@dataclass(frozen=True)
class DecayParams:
    iterations: int
    inner_length: int

    def __post_init__(self):
        if self.iterations < 1 or self.inner_length < 1:
            raise ValueError("Decay needs at least one iteration of length >= 1")

    @property
    def rounds(self) -> int:
        return self.iterations * self.inner_length

    @classmethod
    def for_n(cls, n: int, iterations: int) -> "DecayParams":
        return cls(iterations, log_n(n))


def decay_probabilities(params: DecayParams) -> np.ndarray:
    """Per-round transmit probability of a holder: 2^-i for i = 1..log n, repeated."""
    one = np.ldexp(1.0, -np.arange(1, params.inner_length + 1))
    return np.tile(one, params.iterations)


def decay_transmit(rng: np.random.Generator, holders: np.ndarray, params: DecayParams) -> np.ndarray:
    probs = decay_probabilities(params)
    tx = np.zeros((len(probs), len(holders)), dtype=bool)
    idx = np.flatnonzero(holders)
    if len(idx):
        tx[:, idx] = rng.random((len(probs), len(idx))) < probs[:, None]
    return tx


def decay_block(eng: Engine, rng, holders, params: DecayParams, **block_kw):
    """Holders run ``params.iterations`` iterations of Decay; returns the sender matrix."""
    if not holders.any():
        yield Idle(params.rounds)
        return np.full((params.rounds, eng.n), -1, dtype=np.int64)
    senders = yield Block(decay_transmit(rng, holders, params), **block_kw)
    return senders


# -- closed forms ------------------------------------------------------------

def decay_hear_probability(k: int, inner_length: int, listener_holds=False, iterations=1) -> float:
    """P[a node with exactly k holding neighbours hears at least once].

    With ``listener_holds`` the node itself also runs Decay and cannot hear
    in the rounds where it transmits.
    """
    if k == 0:
        return 0.0
    miss = 1.0
    for i in range(1, inner_length + 1):
        p = 2.0 ** -i
        q = k * p * (1 - p) ** (k - 1)
        if listener_holds:
            q *= 1 - p
        miss *= 1 - q
    return 1 - miss ** iterations


def calibrate_decay_iters(n: int, target: float | None = None) -> int:
    """Fewest iterations for which every node with k >= 1 holding neighbours
    (holding itself or not) misses the message with probability <= target
    (default n^-3)."""
    target = n ** -3.0 if target is None else target
    L = log_n(n)
    worst = min(decay_hear_probability(k, L, h) for k in range(1, n) for h in (False, True))
    return max(1, math.ceil(math.log(target) / math.log(1 - worst)))


def eed_reception_probability(neighbor_p, p_v: float, i: int) -> float:
    """Chance that v hears exactly one neighbour in a single EED step at scale i."""
    ps = np.asarray(neighbor_p, dtype=float) / 2.0 ** i
    if len(ps) == 0:
        return 0.0
    keep = 1 - ps
    total = np.prod(keep)
    return float((1 - p_v / 2.0 ** i) * np.sum(ps * total / keep))


def eed_high_probability(neighbor_p, p_v: float, C: int, n: int) -> float:
    """Exact P[EstimateEffectiveDegree returns HIGH]."""
    L = log_n(n)
    m = C * L
    need = math.ceil(m / EED_HEARD_DIVISOR)
    all_low = 1.0
    for i in range(L + 1):
        all_low *= binom.cdf(need - 1, m, eed_reception_probability(neighbor_p, p_v, i))
    return 1 - all_low


# neighbourhoods at the edges of the guaranteed bands (dyadic desire levels)
CALIBRATION_LOW = ([2.0 ** -7, 2.0 ** -9], [2.0 ** -7], [2.0 ** -10])
CALIBRATION_HIGH = ([0.5, 0.5], [0.5] * 4, [2.0 ** -7] * 128, [0.25] * 4, [2.0 ** -8] * 255)


def eed_worst_failure(C: int, n: int) -> float:
    pvs = (2.0 ** -30, 0.5)
    low = max(eed_high_probability(ps, pv, C, n) for ps in CALIBRATION_LOW for pv in pvs)
    high = max(1 - eed_high_probability(ps, pv, C, n) for ps in CALIBRATION_HIGH for pv in pvs)
    return max(low, high)


def calibrate_C(n: int = 256, target: float | None = None, start: int = 1, stop: int = 400) -> int:
    """Smallest C whose worst per-call failure on the calibration
    neighbourhoods is <= target (default 1/(2n))."""
    target = 1 / (2 * n) if target is None else target
    for C in range(start, stop):
        if eed_worst_failure(C, n) <= target:
            return C
    raise ValueError(f"no C below {stop} reaches failure {target}")


# -- per-node programs -------------------------------------------------------

class DecayProgram(simcore.NodeProgram):
    """One node running Decay; output is the first message it hears."""

    def __init__(self, has_message: bool, message: bytes | None, params: DecayParams):
        if has_message != (message is not None):
            raise ValueError("message must be set iff has_message")
        self.has_message = has_message
        self.message = message
        self.params = params
        self.output = None

    def _hear(self, received):
        if received is not None and self.output is None:
            self.output = received

    def step(self, t, received):
        self._hear(received)
        if t >= self.params.rounds or not self.has_message:
            return simcore.LISTEN
        i = t % self.params.inner_length + 1
        if self.rng.random() < 2.0 ** -i:
            return simcore.Transmit(self.message)
        return simcore.LISTEN

    def finish(self, received):
        self._hear(received)


class EstimateEffectiveDegreeProgram(simcore.NodeProgram):
    """EstimateEffectiveDegree at one node holding desire level ``p``."""

    def __init__(self, p: float, C: int, n: int):
        self.p = p
        self.C = C
        self.L = log_n(n)
        self.per_scale = C * self.L
        self.counts = [0] * (self.L + 1)
        self.output = None

    @property
    def rounds(self) -> int:
        return (self.L + 1) * self.per_scale

    def _hear(self, t, received):
        if received is not None and 0 <= t < self.rounds:
            self.counts[t // self.per_scale] += 1

    def step(self, t, received):
        self._hear(t - 1, received)
        if t >= self.rounds:
            self._decide()
            return simcore.LISTEN
        i = t // self.per_scale
        if self.rng.random() < self.p / 2 ** i:
            return simcore.Transmit(b"\x01")
        return simcore.LISTEN

    def finish(self, received):
        if self.output is None:
            self._hear(self.rounds - 1, received)
            self._decide()

    def _decide(self):
        if self.output is None:
            hit = any(c * EED_HEARD_DIVISOR >= self.per_scale for c in self.counts)
            self.output = HIGH if hit else LOW


# -- block-engine processes --------------------------------------------------

def eed_block(eng: Engine, rng, active, p, C: int, L: int):
    """EstimateEffectiveDegree for every active node; returns the HIGH mask."""
    per_scale = C * L
    high = np.zeros(eng.n, dtype=bool)
    idx = np.flatnonzero(active)
    for i in range(L + 1):
        if len(idx) == 0:
            yield Idle(per_scale)
            continue
        tx = np.zeros((per_scale, eng.n), dtype=bool)
        tx[:, idx] = rng.random((per_scale, len(idx))) < (p[idx] / 2.0 ** i)
        senders = yield Block(tx)
        heard = np.count_nonzero(senders >= 0, axis=0)
        high |= heard * EED_HEARD_DIVISOR >= per_scale
    return high & active


@dataclass
class MisRun:
    mis: set
    outer_rounds: int              # scheduled: 13 c log n
    rounds_to_empty: int | None    # first outer round after which nothing is active
    time_steps: int                # radio rounds of the full schedule
    round_length: int
    rounds_audited: int = 0
    audit_violations: int = 0
    max_payload_bits: int = 0
    diagnostics: list = field(default_factory=list)
    join_log: list = field(default_factory=list)   # (outer round, node, marked, heard_mark)


def mis_schedule(n: int, consts: MisConstants) -> tuple[int, DecayParams, int]:
    L = log_n(n)
    params = DecayParams(consts.decay_iters, L)
    outer = 13 * consts.c * L
    round_len = 2 * params.rounds + (L + 1) * consts.C * L
    return outer, params, round_len


def radio_mis_process(eng: Engine, stats: GraphStats, consts: MisConstants, diagnostics=False):
    """Radio MIS over the whole graph; returns a :class:`MisRun` (schedule
    lengths from ``stats.n``, which may over-estimate the real n)."""
    n = eng.n
    L = log_n(stats.n)
    outer, params, round_len = mis_schedule(stats.n, consts)
    rng = eng.rng("mis")
    adj = eng.graph.adjacency
    active = np.ones(n, dtype=bool)
    in_mis = np.zeros(n, dtype=bool)
    k = np.ones(n, dtype=np.int64)  # desire level p = 2^-k
    empty_at = None
    diag = []
    joins = []
    for t in range(outer):
        if not active.any():
            if empty_at is None:
                empty_at = t
            yield Idle((outer - t) * round_len)
            break
        p = np.ldexp(1.0, -k)
        marked = active & (rng.random(n) < p)
        senders = yield from decay_block(eng, rng, marked, params, bits=1)
        heard_mark = (senders >= 0).any(axis=0)
        joined = marked & ~heard_mark
        senders = yield from decay_block(eng, rng, joined, params, bits=1)
        heard_mis = (senders >= 0).any(axis=0)
        for v in np.flatnonzero(joined):
            joins.append((t, int(v), bool(marked[v]), bool(heard_mark[v])))
        in_mis |= joined
        active &= ~joined & ~heard_mis
        pa = np.where(active, p, 0.0)
        high = yield from eed_block(eng, rng, active, pa, consts.C, L)
        if diagnostics:
            d = adj @ pa
            diag.append({
                "round": t, "active": int(active.sum()), "marked": int(marked.sum()),
                "joined": int(joined.sum()), "in_mis": int(in_mis.sum()), "high": int(high.sum()),
                "golden1": int(np.count_nonzero(active & (d < 1) & (k == 1))),
                "max_d": float(d[active].max()) if active.any() else 0.0,
            })
        k = np.where(active & high, k + 1, np.where(active, np.maximum(k - 1, 1), k))
    if empty_at is None and not active.any():
        empty_at = outer
    return MisRun(
        mis=set(np.flatnonzero(in_mis).tolist()),
        outer_rounds=outer,
        rounds_to_empty=empty_at,
        time_steps=outer * round_len,
        round_length=round_len,
        diagnostics=diag,
        join_log=joins,
    )


def radio_mis(graph: Graph, stats: GraphStats | None = None, constants: MisConstants | None = None,
              seed: int = 0, *, audit=True, record=False, diagnostics=False, engine_out=None) -> MisRun:
    from .graphs import compute_stats

    stats = stats or compute_stats(graph)
    consts = constants or MisConstants()
    eng = Engine(graph, seed, audit=audit, record=record)
    res = eng.run(radio_mis_process(eng, stats, consts, diagnostics))
    res.rounds_audited = eng.rounds_audited
    res.audit_violations = eng.audit_violations
    res.max_payload_bits = eng.max_payload_bits
    if engine_out is not None:
        engine_out.append(eng)
    return res


# -- checking and reference --------------------------------------------------

@dataclass
class MisCheck:
    valid: bool
    internal_edges: list
    uncovered: list

    def report(self) -> str:
        if self.valid:
            return "valid"
        parts = []
        if self.internal_edges:
            parts.append(f"not independent: edges {self.internal_edges[:5]}")
        if self.uncovered:
            parts.append(f"not maximal: uncovered {self.uncovered[:10]}")
        return "; ".join(parts)


def check_mis(graph: Graph, candidate) -> MisCheck:
    inside = np.zeros(graph.n, dtype=bool)
    cand = list(candidate)
    if any(v < 0 or v >= graph.n for v in cand):
        raise ValueError("candidate set is not a subset of V")
    inside[cand] = True
    e = graph.edges
    bad = e[inside[e[:, 0]] & inside[e[:, 1]]].tolist() if graph.m else []
    covered = inside | (graph.adjacency @ inside.astype(np.float32) > 0)
    uncovered = np.flatnonzero(~covered).tolist()
    return MisCheck(not bad and not uncovered, [tuple(x) for x in bad], uncovered)


def local_mis(graph: Graph, rounds: int | None = None, seed: int = 0,
              trajectory: list | None = None) -> set:
    """Desire-level MIS with exact message passing (LOCAL model).

    Effective degree is computed exactly and compared with 2. ``trajectory``
    (if given) collects the number of active nodes after every round.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x6A,)))
    rounds = 13 * 4 * log_n(graph.n) if rounds is None else rounds
    adj = graph.adjacency
    active = np.ones(graph.n, dtype=bool)
    in_mis = np.zeros(graph.n, dtype=bool)
    p = np.full(graph.n, 0.5)
    for _ in range(rounds):
        if not active.any():
            break
        marked = active & (rng.random(graph.n) < p)
        marked_nbr = adj @ marked.astype(np.float32) > 0
        joined = marked & ~marked_nbr
        in_mis |= joined
        near = adj @ joined.astype(np.float32) > 0
        active &= ~joined & ~near
        d = adj @ np.where(active, p, 0.0)
        p = np.where(d >= 2, p / 2, np.minimum(2 * p, 0.5))
        if trajectory is not None:
            trajectory.append(int(active.sum()))
    return set(np.flatnonzero(in_mis).tolist())
