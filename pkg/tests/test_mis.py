
import numpy as np
import pytest

from radionet import graphs as G
from radionet import mis as M
from radionet import simcore as sc
from radionet.acceptance import decay_frequency, eed_frequencies
from radionet.engine import Engine

from oracles import decay_hear_exact, is_mis


def test_log_n():
    assert [M.log_n(n) for n in (1, 2, 3, 256, 257)] == [1, 1, 2, 8, 9]


@pytest.mark.parametrize("k", [1, 2, 8, 64, 255])
def test_decay_closed_form_matches_exact_rationals(k):
    assert M.decay_hear_probability(k, 8) == pytest.approx(float(decay_hear_exact(k, 8)), abs=1e-12)


def test_decay_single_transmitter_frozen():
    # exact rational product for k=1, L=8, evaluated once and frozen
    assert M.decay_hear_probability(1, 8) == pytest.approx(0.710080882141483, abs=1e-12)


def test_decay_monte_carlo_single_neighbour():
    assert abs(decay_frequency(1, 10_000, 256, 11) - 0.710080882141483) <= 0.02


def test_decay_thirty_iterations_almost_sure():
    heard = 0
    for s in range(2000):
        eng = Engine(G.path_graph(2), s, audit=False)
        snd = eng.run(M.decay_block(eng, eng.rng("d"), np.array([False, True]), M.DecayParams(30, 8)))
        heard += bool((snd[:, 0] >= 0).any())
    assert heard / 2000 >= 0.999


def test_decay_without_holders_is_silent():
    eng = Engine(G.complete_graph(6), 0)
    snd = eng.run(M.decay_block(eng, eng.rng("d"), np.zeros(6, bool), M.DecayParams(3, 4)))
    assert (snd == -1).all()


def test_decay_node_program_is_one_hop():
    g = G.path_graph(4)
    params = M.DecayParams(23, M.log_n(4))
    progs = [M.DecayProgram(v == 0, b"hi" if v == 0 else None, params) for v in range(4)]
    tr = sc.run(g, progs, params.rounds, seed=2)
    assert tr.outputs == [None, b"hi", None, None]
    assert not sc.replay_violations(g, tr)


def test_calibrated_constants_are_the_defaults():
    assert M.calibrate_decay_iters(256) == M.MisConstants().decay_iters
    assert M.calibrate_C(256) == M.MisConstants().C


def test_eed_isolated_node_is_low():
    eng = Engine(G.empty_graph(3), 0)
    high = eng.run(M.eed_block(eng, eng.rng("e"), np.ones(3, bool), np.full(3, 0.5), 34, 8))
    assert not high.any()


def test_eed_high_and_low_frequencies():
    assert eed_frequencies([0.5] * 4, 0.5, 3000, 34, 256, 1) >= 1 - 1 / 256
    assert 1 - eed_frequencies([2.0 ** -10], 0.5, 3000, 34, 256, 2) >= 1 - 1 / 256


def test_eed_closed_form_monotone_in_degree():
    a = M.eed_high_probability([0.5] * 2, 0.5, 34, 256)
    b = M.eed_high_probability([2.0 ** -10], 0.5, 34, 256)
    assert a > 1 - 1 / 512 and b < 1 / 512


def test_eed_node_program_matches_block_verdict():
    g = G.star_graph(4)
    progs = [M.EstimateEffectiveDegreeProgram(0.5, 34, 256) for _ in range(5)]
    tr = sc.run(g, progs, progs[0].rounds, seed=0)
    assert tr.outputs[0] == "HIGH"


def test_mis_single_node():
    assert M.radio_mis(G.empty_graph(1), seed=0).mis == {0}


def test_mis_clique_has_one_node():
    for s in range(10):
        r = M.radio_mis(G.complete_graph(8), seed=s)
        assert len(r.mis) == 1 and M.check_mis(G.complete_graph(8), r.mis).valid


def test_mis_empty_graph_takes_everyone():
    assert M.radio_mis(G.empty_graph(7), seed=3).mis == set(range(7))


def test_mis_star_both_outcomes_valid():
    g = G.star_graph(16)
    for s in range(10):
        m = M.radio_mis(g, seed=s).mis
        assert m in ({0}, set(range(1, 17)))


def test_mis_gnp64_thousand_seeds():
    bad = 0
    for s in range(1000):
        g = G.gen_gnp(64, 0.1, np.random.default_rng([64, s]))
        r = M.radio_mis(g, G.compute_stats(g), seed=s, audit=False)
        bad += not M.check_mis(g, r.mis).valid
    assert bad == 0


@pytest.mark.parametrize("s,ok,uncovered", [({0, 2}, True, []), ({1}, True, []), ({0}, False, [2])])
def test_checker_on_p3(s, ok, uncovered):
    c = M.check_mis(G.path_graph(3), s)
    assert c.valid == ok and c.uncovered == uncovered
    assert is_mis(G.path_graph(3), s) == ok


def test_checker_reports_internal_edge():
    c = M.check_mis(G.path_graph(3), {0, 1})
    assert not c.valid and c.internal_edges == [(0, 1)]
    with pytest.raises(ValueError):
        M.check_mis(G.path_graph(3), {5})


def test_mis_matches_networkx_oracle_on_udg():
    for s in range(5):
        g = G.gen_udg(80, 5.0, np.random.default_rng(s))
        assert is_mis(g, M.radio_mis(g, seed=s).mis)


def test_mis_deterministic_and_audited():
    g = G.grid_udg(8)
    a, b = M.radio_mis(g, seed=4), M.radio_mis(g, seed=4)
    assert a.mis == b.mis and a.time_steps == b.time_steps
    assert a.rounds_audited > 0 and a.audit_violations == 0


def test_mis_trace_replays_per_node():
    g = G.gen_gnp(20, 0.2, np.random.default_rng(1))
    eo = []
    M.radio_mis(g, seed=1, record=True, engine_out=eo)
    assert eo[0].trace.replay_violations(g) == 0


def test_local_reference_is_valid():
    g = G.gen_gnp(60, 0.1, np.random.default_rng(8))
    assert M.check_mis(g, M.local_mis(g, seed=0)).valid


def test_payload_is_a_single_bit():
    assert M.radio_mis(G.grid_udg(6), seed=0).max_payload_bits == 1
