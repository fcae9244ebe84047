import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from radionet import clustering as Cl
from radionet import compete as Co
from radionet import graphs as G
from radionet import simcore as sc
from radionet.engine import Auditor, resolve_block
from radionet.graph import Graph
from radionet.mis import check_mis, radio_mis

from oracles import is_mis, reference_channel

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def graphs(draw, max_n=14):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    return Graph.from_edges(n, chosen)


@st.composite
def connected_graphs(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    # random spanning tree plus extra edges
    edges = [(draw(st.integers(0, v - 1)), v) for v in range(1, n)]
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    extra = draw(st.lists(st.sampled_from(pairs), max_size=n)) if pairs else []
    return Graph.from_edges(n, edges + extra)


@SETTINGS
@given(graphs(), st.integers(0, 2 ** 32 - 1))
def test_reception_invariant(g, seed):
    rng = np.random.default_rng(seed)
    tx = rng.random((6, g.n)) < rng.uniform(0.05, 0.9)
    got = resolve_block(g, tx)
    audit = Auditor(g)
    audit.check(tx, got)
    assert audit.violations == 0
    for r in range(6):
        want = reference_channel(g, set(np.flatnonzero(tx[r]).tolist()))
        assert {v: int(u) for v, u in enumerate(got[r]) if u >= 0} == want
        acts = [sc.Transmit(bytes([v % 256, v // 256])) if tx[r, v] else sc.LISTEN for v in range(g.n)]
        per_node = sc.step_round(g, acts)
        assert [None if m is None else m[0] + 256 * m[1] for m in per_node] == \
               [None if u < 0 else int(u) for u in got[r]]


class Counter(sc.NodeProgram):
    def step(self, t, received):
        return sc.LISTEN


@SETTINGS
@given(st.integers(0, 200))
def test_multiplex_fairness(k):
    prog = sc.multiplex(Counter(), Counter())
    sc.run(G.empty_graph(1), [prog], k, seed=0)
    a, b = prog.sub_rounds
    assert a + b == k and a - b in (0, 1)


@SETTINGS
@given(graphs(), st.integers(0, 1000))
def test_mis_always_valid(g, seed):
    r = radio_mis(g, seed=seed)
    assert check_mis(g, r.mis).valid and is_mis(g, r.mis)
    assert r.audit_violations == 0


@SETTINGS
@given(connected_graphs(), st.integers(0, 1000), st.floats(0.05, 3.0))
def test_partition_minimal_and_connected(g, seed, beta):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, g.n + 1))
    centers = np.sort(rng.choice(g.n, k, replace=False))
    a = Cl.partition_ideal(g, centers, beta, rng)
    dist = g.hop_distances(centers)
    shifted = dist - a.shifts[centers][:, None]
    assert np.allclose(a.shifted, shifted.min(axis=0))
    for c, members in a.members().items():
        sub = Graph.from_edges(g.n, [e for e in g.edges.tolist() if e[0] in members and e[1] in members])
        d = sub.hop_distances([c])[0]
        assert np.isfinite(d[members]).all()
        assert np.array_equal(d[members].astype(int), a.hop[members])


@settings(max_examples=15, deadline=None)
@given(connected_graphs(max_n=10), st.integers(0, 1000), st.data())
def test_compete_monotone_and_rank_invariant(g, seed, data):
    k = data.draw(st.integers(1, g.n))
    nodes = data.draw(st.lists(st.integers(0, g.n - 1), min_size=k, max_size=k, unique=True))
    keys = data.draw(st.lists(st.integers(-50, 50), min_size=k, max_size=k))
    S = dict(zip(nodes, keys))
    cfg = Co.CompeteConfig(kappa2=50)
    r = Co.compete(g, S, seed=seed, config=cfg)
    for v, key in S.items():
        assert r.keys[r.held[v]] >= key
    assert set(r.held.tolist()) <= set(range(len(r.keys))) | {-1}
    shifted = Co.compete(g, {v: 3 * key + 1000 for v, key in S.items()}, seed=seed, config=cfg)
    assert shifted.held.tolist() == r.held.tolist()
    again = Co.compete(g, S, seed=seed, config=cfg)
    assert again.held.tolist() == r.held.tolist() and again.rounds_to_agreement == r.rounds_to_agreement
