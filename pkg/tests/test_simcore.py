import numpy as np
import pytest

from radionet import graphs as G
from radionet import simcore as sc
from radionet.engine import Block, Engine, Idle, Spawn, resolve_block

from oracles import reference_channel

T, L = sc.Transmit, sc.LISTEN


class Always(sc.NodeProgram):
    def __init__(self, msg=None):
        self.msg = msg
        self.heard = []

    def step(self, t, received):
        if t:
            self.heard.append(received)
        return T(self.msg) if self.msg is not None else L


def test_path_single_transmitter():
    g = G.path_graph(3)
    assert sc.step_round(g, [T(b"x"), L, L]) == [None, b"x", None]


def test_triangle_collision():
    g = G.complete_graph(3)
    assert sc.step_round(g, [T(b"a"), L, T(b"c")]) == [None, None, None]


def test_star_all_leaves_transmit():
    g = G.star_graph(5)
    got = sc.step_round(g, [L] + [T(bytes([i])) for i in range(5)])
    assert got == [None] * 6


def test_action_count_checked():
    with pytest.raises(sc.StructuralError):
        sc.step_round(G.path_graph(3), [L, L])


def test_zero_rounds_empty_trace():
    tr = sc.run(G.path_graph(2), [Always(), Always()], 0, seed=1)
    assert len(tr) == 0


def test_single_listener():
    tr = sc.run(G.empty_graph(1), [Always()], 7, seed=0)
    assert len(tr) == 7
    assert all(r.actions == [None] and r.received == [None] for r in tr.rounds)


class Coin(sc.NodeProgram):
    def step(self, t, received):
        return T(b"1") if self.rng.random() < 0.5 else L


def test_run_is_deterministic():
    g = G.cycle_graph(6)
    a = sc.run(g, [Coin() for _ in range(6)], 40, seed=9)
    b = sc.run(g, [Coin() for _ in range(6)], 40, seed=9)
    assert a.to_jsonl() == b.to_jsonl()
    assert not sc.replay_violations(g, a)


def test_trace_round_trip():
    g = G.cycle_graph(5)
    a = sc.run(g, [Coin() for _ in range(5)], 12, seed=3)
    b = sc.Trace.from_jsonl(a.to_jsonl(), 5, 3)
    assert [r.actions for r in a.rounds] == [r.actions for r in b.rounds]


def test_replay_flags_tampering():
    g = G.path_graph(3)
    tr = sc.run(g, [Always(b"m"), Always(), Always()], 2, seed=0)
    tr.rounds[1].received[2] = b"m"
    assert sc.replay_violations(g, tr) == [(1, 2)]


def _schedule(prog, rounds):
    tr = sc.run(G.empty_graph(1), [prog], rounds, seed=0)
    return [r.actions[0] for r in tr.rounds]


def test_multiplex_alternates():
    assert _schedule(sc.multiplex(Always(b"m"), Always()), 6) == [b"m", None] * 3


def test_multiplex_with_silent_is_half_speed():
    class Count(sc.NodeProgram):
        def step(self, t, received):
            return T(bytes([t]))
    assert _schedule(sc.multiplex(Count(), sc.Silent()), 8) == [bytes([0]), None, bytes([1]), None,
                                                                  bytes([2]), None, bytes([3]), None]


def test_nested_multiplex_interleave():
    # even/odd rule applied twice: a on 0 mod 4, b on 2 mod 4, c on odd rounds
    sched = _schedule(sc.multiplex(sc.multiplex(Always(b"a"), Always(b"b")), Always(b"c")), 8)
    assert sched == [b"a", b"c", b"b", b"c"] * 2


# -- block engine ------------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_resolve_block_matches_reference(seed):
    rng = np.random.default_rng(seed)
    g = G.gen_gnp(30, 0.2, rng)
    tx = rng.random((20, 30)) < 0.15
    got = resolve_block(g, tx)
    for r in range(20):
        want = reference_channel(g, set(np.flatnonzero(tx[r]).tolist()))
        assert {v: int(u) for v, u in enumerate(got[r]) if u >= 0} == want


def test_engine_spawn_slots():
    g = G.empty_graph(1)
    seen = []

    def proc(tag, k):
        for _ in range(k):
            seen.append((tag, eng.now))
            yield Block(np.ones((1, 1), dtype=bool))

    def root():
        yield Spawn(proc("m", 3), proc("b", 3), 3)

    eng = Engine(g, 0, record=True)
    eng.run(root())
    rounds = sorted(int(x) for c in eng.trace.chunks for x in c[0])
    assert rounds == list(range(6))
    assert [t for t, _ in sorted(seen, key=lambda x: x[1])] == ["m", "b"] * 3


def test_engine_limit_cuts_children():
    def forever():
        while True:
            yield Idle(1)

    def root():
        yield Spawn(forever(), forever(), 10 ** 9)

    eng = Engine(G.path_graph(2), 0)
    assert eng.run(root(), limit=11) is None
    assert eng.rounds_used <= 11


def test_auditor_catches_wrong_senders():
    g = G.path_graph(3)
    eng = Engine(g, 0)
    tx = np.array([[True, False, False]])
    eng.auditor.check(tx, np.array([[-1, 0, 0]]))
    assert eng.audit_violations == 1
