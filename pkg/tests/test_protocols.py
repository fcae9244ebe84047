import math

import numpy as np
import pytest
from scipy.stats import binom

from radionet import graphs as G
from radionet.mis import log_n
from radionet.protocols import broadcast, leader_election, nominate


def test_broadcast_single_node():
    r = broadcast(G.empty_graph(1), 0, b"m")
    assert r.success and r.outputs == [b"m"] and r.run.rounds_to_agreement == 0


def test_broadcast_p3_from_middle():
    r = broadcast(G.path_graph(3), 1, b"mid", seed=0)
    assert r.success and r.outputs == [b"mid"] * 3


def test_broadcast_payload_bytes_exact():
    msg = bytes(range(256))
    r = broadcast(G.grid_udg(5), 12, msg, seed=2)
    assert r.success and all(m == msg for m in r.outputs)
    assert r.run.max_payload_bits >= 8 * len(msg)


def test_broadcast_bad_source():
    with pytest.raises(ValueError):
        broadcast(G.path_graph(3), 3, b"x")


def test_election_single_node():
    e = leader_election(G.empty_graph(1), seed=0)
    assert e.success and e.leader == [0]


def test_election_winner_is_max_rank():
    g = G.complete_graph(64)
    st = G.compute_stats(g)
    for s in range(10):
        e = leader_election(g, seed=s, stats=st)
        assert e.success
        assert set(e.leader) == {e.expected_leader}
        assert e.ranks[e.expected_leader] == max(e.ranks.values())


def test_candidate_count_concentration():
    # |C| ~ Binomial(64, 2 log n / n); the oracle is the binomial tail itself
    n = 64
    p = 2 * log_n(n) / n
    lo, hi = 1, 10 * log_n(n)
    inside = binom.cdf(hi, n, p) - binom.cdf(lo - 1, n, p)
    assert inside > 0.99
    rng = np.random.default_rng(0)
    hits = sum(lo <= len(nominate(n, n, 2.0, rng)) <= hi for _ in range(2000))
    assert hits / 2000 >= 0.99


def test_election_retries_when_nobody_volunteers():
    e = leader_election(G.path_graph(4), seed=0, kappa_c=1e-9)
    assert e.attempts == 2 and not e.success and e.leader == [None] * 4


def test_election_deterministic():
    g = G.grid_udg(8)
    a, b = leader_election(g, seed=5), leader_election(g, seed=5)
    assert a.leader == b.leader and a.candidates == b.candidates
    assert math.isfinite(a.run.rounds_to_agreement)
