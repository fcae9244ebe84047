"""Compete(S): every node learns the highest-ranked message held by S.

The main process computes an MIS, a coarse clustering around it, a bank of
fine clusterings inside every coarse cluster and a random sequence of bank
entries per coarse cluster, then runs Intra-Cluster Propagation (ICP) over
the sequence. A background process, multiplexed on odd rounds, builds its
own clusterings over all nodes and cycles ICP through them.

In-cluster schedules are BFS layers learned during clustering: one Decay
block per layer step. Ranks live in the engine's shared slot; a listener
keeps the maximum of what it holds and what it hears.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import ShiftAssignment, delta_cap, fine_j_range, partition_process
from .engine import Engine, Idle, Spawn
from .graph import Graph
from .graphs import GraphStats, compute_stats
from .mis import DecayParams, MisConstants, decay_block, log_n, radio_mis_process

RANK_BITS = 64
TAG_BITS = 32


@dataclass(frozen=True)
class CompeteConfig:
    mis: MisConstants = MisConstants()
    kappa_icp: float = 1.0        # main ICP radius: kappa_icp * max(1, log_D alpha) / beta
    kappa_bg: float = 1.0         # background ICP radius: kappa_bg * log n / beta
    kappa1: float = 64.0          # budget: kappa1 * D * max(1, log_D alpha) * log n
    kappa2: float = 2000.0        #       + kappa2 * log^4 n
    background: bool = True
    inject: str = "start"         # "start" | "propagation"

    def __post_init__(self):
        if self.inject not in ("start", "propagation"):
            raise ValueError(f"inject must be 'start' or 'propagation', not {self.inject!r}")
        for k in ("kappa_icp", "kappa_bg", "kappa1", "kappa2"):
            if getattr(self, k) <= 0:
                raise ValueError(f"{k} must be positive")


def log_d_alpha(stats: GraphStats) -> float:
    if stats.D < 2 or stats.alpha <= 1:
        return 0.0
    return math.log(stats.alpha) / math.log(stats.D)


def budget(stats: GraphStats, cfg: CompeteConfig) -> int:
    L = log_n(stats.n)
    return math.ceil(cfg.kappa1 * max(stats.D, 1) * max(1.0, log_d_alpha(stats)) * L
                     + cfg.kappa2 * L ** 4)


def main_icp_radius(stats: GraphStats, beta: float, cfg: CompeteConfig) -> int:
    return max(1, math.ceil(cfg.kappa_icp * max(1.0, log_d_alpha(stats)) / beta))


def background_icp_radius(stats: GraphStats, beta: float, cfg: CompeteConfig) -> int:
    return max(1, math.ceil(cfg.kappa_bg * log_n(stats.n) / beta))


# -- intra-cluster propagation -------------------------------------------------

def _heard_from_parent(senders, fc, layer, rank, heard):
    # only the parent layer counts: overhearing a child must not mute the converge-cast
    ri, vi = np.nonzero(senders >= 0)
    u = senders[ri, vi]
    ok = (fc[vi] == fc[u]) & (layer[vi] == layer[u] + 1)
    np.maximum.at(heard, vi[ok], rank[u[ok]])


def icp_main(eng: Engine, fc: np.ndarray, layer: np.ndarray, ell: int, params: DecayParams,
             rng, bits: int):
    """Center-out to radius ell, converge-cast of higher ranks, center-out again.

    ``fc`` is the cluster label of every node (-1: not participating),
    ``layer`` its hop distance to the cluster center.
    """
    member = fc >= 0
    kw = dict(group=fc, listen_group=fc, bits=bits)
    heard = np.full(eng.n, -1, dtype=np.int64)
    for k in range(ell):
        rank = eng.best.copy()
        holders = member & (layer == k) & (rank >= 0)
        senders = yield from decay_block(eng, rng, holders, params, rank=rank, **kw)
        _heard_from_parent(senders, fc, layer, rank, heard)
    for k in range(ell, 0, -1):
        rank = eng.best.copy()
        holders = member & (layer == k) & (rank > heard)
        yield from decay_block(eng, rng, holders, params, rank=rank, **kw)
    for k in range(ell):
        rank = eng.best.copy()
        holders = member & (layer == k) & (rank >= 0)
        yield from decay_block(eng, rng, holders, params, rank=rank, **kw)


def icp_background(eng: Engine, fc: np.ndarray, L: int, rng, bits: int):
    """Repeated cycles i = 1..L: with probability 2^-i, decided once per
    cluster, the cluster's holders run one Decay iteration that any listener
    accepts; otherwise the cluster stays silent for L rounds."""
    one = DecayParams(1, L)
    labels, inverse = np.unique(fc, return_inverse=True)
    member = fc >= 0
    while True:
        for i in range(1, L + 1):
            heads = rng.random(len(labels)) < 2.0 ** -i
            rank = eng.best.copy()
            holders = member & heads[inverse] & (rank >= 0)
            yield from decay_block(eng, rng, holders, one, rank=rank, bits=bits)


def icp_length(ell: int, params: DecayParams) -> int:
    return 3 * ell * params.rounds


def icp(eng: Engine, fc, layer, ell, params, tag, bits):
    """One ICP call with its background, as a multiplexed pair."""
    rng_m = eng.rng(f"icp:{tag}")
    rng_b = eng.rng(f"icpbg:{tag}")
    yield Spawn(icp_main(eng, fc, layer, ell, params, rng_m, bits),
                icp_background(eng, fc, params.inner_length, rng_b, bits),
                icp_length(ell, params))


# -- compete -------------------------------------------------------------------

@dataclass
class _Context:
    stats: GraphStats
    cfg: CompeteConfig
    params: DecayParams
    msg_bits: int
    inject_nodes: np.ndarray
    inject_ranks: np.ndarray
    inject_round: int | None = None
    mis: set | None = None
    coarse: ShiftAssignment | None = None
    bank_size: int = 0
    seq_known: float = 0.0
    main_icp_calls: int = 0
    bg_icp_calls: int = 0
    degraded: bool = False


def _disseminate(eng: Engine, a: ShiftAssignment, radius: int, params: DecayParams, rng, bits):
    """Center-out spread of one value over cluster BFS layers; returns who knows it."""
    n = eng.n
    knows = a.center == np.arange(n)
    for k in range(radius):
        senders = yield from decay_block(eng, rng, knows & (a.hop == k), params, bits=bits)
        ri, vi = np.nonzero(senders >= 0)
        u = senders[ri, vi]
        ok = a.center[vi] == a.center[u]
        knows[vi[ok]] = True
    return knows


def _inject(eng: Engine, ctx: _Context):
    if ctx.cfg.inject == "propagation" and ctx.inject_round is None:
        ctx.inject_round = eng.now
        eng.inject(ctx.inject_nodes, ctx.inject_ranks, eng.now)


def compete_main(eng: Engine, ctx: _Context):
    st, cfg, params = ctx.stats, ctx.cfg, ctx.params
    n = eng.n
    D = max(st.D, 1)
    tagged = RANK_BITS + TAG_BITS + ctx.msg_bits

    run = yield from radio_mis_process(eng, st, cfg.mis)
    ctx.mis = run.mis
    centers = np.zeros(n, dtype=bool)
    centers[list(run.mis)] = True

    beta_c = D ** -0.5
    coarse = yield from partition_process(eng, centers, beta_c, st, params, "coarse")
    ctx.coarse = coarse
    reach_c = delta_cap(beta_c, st.n) + 1

    bank = []
    for j in fine_j_range(st.D):
        for k in range(math.ceil(D ** 0.2)):
            a = yield from partition_process(eng, centers, 2.0 ** -j, st, params, f"fine:{j}:{k}",
                                             group=coarse.center, extra_phases=reach_c)
            bank.append((j, a))
    ctx.bank_size = len(bank)
    if not bank:
        ctx.degraded = True
        _inject(eng, ctx)
        return

    # every coarse center draws a 64-bit seed; the sequence is derived from it
    seq_len = math.ceil(D ** 0.99)
    seeds = eng.rng("sequence").integers(0, 2 ** 63, size=n)
    knows = yield from _disseminate(eng, coarse, reach_c, params, eng.rng("disseminate"),
                                    RANK_BITS + TAG_BITS)
    ctx.seq_known = float(knows.mean())
    owners = np.unique(coarse.center[coarse.center >= 0])
    seq = np.zeros((n, seq_len), dtype=np.int64)
    for c in owners:
        seq[c] = np.random.default_rng(int(seeds[c])).integers(0, len(bank), size=seq_len)
    bank_center = np.stack([a.center for _, a in bank])
    bank_hop = np.stack([a.hop for _, a in bank])
    ell = max(main_icp_radius(st, 2.0 ** -j, cfg) for j, _ in bank)
    cols = np.arange(n)
    owner = np.maximum(coarse.center, 0)

    _inject(eng, ctx)
    for idx in range(seq_len):
        pick = seq[owner, idx]
        fc = np.where(knows, bank_center[pick, cols], -1)
        layer = np.where(knows, bank_hop[pick, cols], -1)
        yield from icp(eng, fc, layer, ell, params, f"main:{idx}", tagged)
        ctx.main_icp_calls += 1


def compete_background(eng: Engine, ctx: _Context):
    st, cfg, params = ctx.stats, ctx.cfg, ctx.params
    D = max(st.D, 1)
    beta = D ** -0.1
    everyone = np.ones(eng.n, dtype=bool)
    clusterings = []
    for k in range(math.ceil(D ** 0.2)):
        a = yield from partition_process(eng, everyone, beta, st, params, f"bg:{k}")
        clusterings.append(a)
    ell = background_icp_radius(st, beta, cfg)
    tagged = RANK_BITS + TAG_BITS + ctx.msg_bits
    cycle = 0
    while True:
        a = clusterings[cycle % len(clusterings)]
        yield from icp(eng, a.center, a.hop, ell, params, f"bg:{cycle}", tagged)
        cycle += 1
        ctx.bg_icp_calls = cycle


def _silent():
    while True:
        yield Idle(1 << 30)


def compete_process(eng: Engine, ctx: _Context, total: int):
    bg = compete_background(eng, ctx) if ctx.cfg.background else _silent()
    yield Spawn(compete_main(eng, ctx), bg, math.ceil(total / 2))


@dataclass
class CompeteResult:
    held: np.ndarray              # per node: index into ``keys`` (-1 = nothing)
    keys: list                    # distinct candidate keys, ascending
    success: bool
    rounds_to_agreement: int | None   # counted from the input arrival round
    inject_round: int
    budget: int
    rounds_simulated: int
    uninformed: list
    max_payload_bits: int
    rounds_audited: int
    audit_violations: int
    degraded: bool
    mis_size: int | None
    main_icp_calls: int
    bg_icp_calls: int
    seq_known: float
    extra: dict = field(default_factory=dict)

    def failure_report(self) -> str:
        if self.success:
            return "ok"
        return (f"no agreement within {self.budget} rounds; {len(self.uninformed)} uninformed "
                f"nodes, e.g. {self.uninformed[:10]}")


def compete(graph: Graph, S: dict, seed: int = 0, stats: GraphStats | None = None,
            config: CompeteConfig | None = None, *, msg_bits: int = 0, audit=True,
            record=False, engine_out: list | None = None) -> CompeteResult:
    """Run Compete with candidates ``S`` (node -> totally ordered key).

    Stops at the budget or as soon as every node holds the maximum key
    (from then on no node's state can change).
    """
    if not S:
        raise ValueError("candidate set is empty")
    if any(not 0 <= v < graph.n for v in S):
        raise ValueError("candidate outside the graph")
    cfg = config or CompeteConfig()
    stats = stats or compute_stats(graph)
    keys = sorted(set(S.values()))
    index = {k: i for i, k in enumerate(keys)}
    nodes = np.fromiter(S.keys(), dtype=np.int64)
    ranks = np.array([index[S[v]] for v in S], dtype=np.int64)
    target = len(keys) - 1
    total = budget(stats, cfg)

    init = np.full(graph.n, -1, dtype=np.int64)
    if cfg.inject == "start":
        np.maximum.at(init, nodes, ranks)
    eng = Engine(graph, seed, audit=audit, record=record, best=init, target=target,
                 stop_on_agreement=True)
    ctx = _Context(stats, cfg, DecayParams(cfg.mis.decay_iters, log_n(stats.n)), msg_bits,
                   nodes, ranks, inject_round=0 if cfg.inject == "start" else None)
    eng.run(compete_process(eng, ctx, total), limit=total)

    start = ctx.inject_round
    agreed = eng.agreement_round
    success = agreed is not None and start is not None and agreed - start <= total
    held = eng.best.copy()
    if engine_out is not None:
        engine_out.append(eng)
    return CompeteResult(
        held=held, keys=keys, success=bool(success),
        rounds_to_agreement=None if agreed is None or start is None else agreed - start,
        inject_round=-1 if start is None else start, budget=total,
        rounds_simulated=eng.rounds_used,
        uninformed=np.flatnonzero(held != target).tolist(),
        max_payload_bits=eng.max_payload_bits, rounds_audited=eng.rounds_audited,
        audit_violations=eng.audit_violations, degraded=ctx.degraded,
        mis_size=None if ctx.mis is None else len(ctx.mis),
        main_icp_calls=ctx.main_icp_calls, bg_icp_calls=ctx.bg_icp_calls, seq_known=ctx.seq_known,
    )


# -- stand-alone pieces ----------------------------------------------------------

def intra_cluster_propagation(graph: Graph, assignment: ShiftAssignment, ell: int, held,
                              stats: GraphStats | None = None, seed: int = 0, *,
                              decay_iters: int = 23, background=True, audit=True):
    """One ICP call on a fixed clustering; returns (held ranks after, engine)."""
    stats = stats or compute_stats(graph)
    params = DecayParams(decay_iters, log_n(stats.n))
    eng = Engine(graph, seed, audit=audit, best=np.asarray(held))
    fc, layer = assignment.center, assignment.hop
    if background:
        proc = icp(eng, fc, layer, ell, params, "solo", RANK_BITS + TAG_BITS)
    else:
        proc = icp_main(eng, fc, layer, ell, params, eng.rng("icp:solo"), RANK_BITS + TAG_BITS)
    eng.run(proc)
    return eng.best.copy(), eng


def background_only(graph: Graph, held, rounds: int, stats: GraphStats | None = None,
                    seed: int = 0, config: CompeteConfig | None = None, audit=True):
    """The background process alone for ``rounds`` rounds; returns (held, context, engine)."""
    cfg = config or CompeteConfig()
    stats = stats or compute_stats(graph)
    eng = Engine(graph, seed, audit=audit, best=np.asarray(held))
    ctx = _Context(stats, cfg, DecayParams(cfg.mis.decay_iters, log_n(stats.n)), 0,
                   np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), inject_round=0)
    eng.run(compete_background(eng, ctx), limit=rounds)
    return eng.best.copy(), ctx, eng
