"""The eleven acceptance criteria at full size; one PASS/FAIL line each."""

import pytest

import conftest
from radionet import acceptance as acc
from radionet.compete import CompeteConfig
from radionet.mis import MisConstants

CONSTS = MisConstants()


@pytest.fixture(scope="module")
def tally():
    return acc.AuditTally()


@pytest.fixture(scope="module")
def corpus(tally):
    return acc._corpus_mis(acc.analytics_corpus(), CONSTS, tally)


def _report(res):
    line = res.line()
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert res.passed, line


def test_c01_mis_validity(tally):
    _report(acc.criterion_1(tally, CONSTS))


def test_c02_mis_round_scaling(tally):
    _report(acc.criterion_2(tally, CONSTS))


def test_c03_effective_degree_estimate(tally):
    _report(acc.criterion_3(tally, CONSTS))


def test_c04_decay_hearing_probability(tally):
    _report(acc.criterion_4(tally))


def test_c05_expected_distance_to_center(tally):
    _report(acc.criterion_5(tally, CONSTS))


def test_c06_bad_j_count(tally, corpus):
    _report(acc.criterion_6(tally, CONSTS, _cache=corpus))


def test_c07_spread_ratio_constant(tally, corpus):
    _report(acc.criterion_7(tally, CONSTS, _cache=corpus))


def test_c08_broadcast(tally):
    _report(acc.criterion_8(tally, CompeteConfig(mis=CONSTS)))


def test_c09_leader_election(tally):
    _report(acc.criterion_9(tally, CompeteConfig(mis=CONSTS)))


def test_c10_compete_round_regimes(tally):
    _report(acc.criterion_10(tally, CONSTS))


def test_c11_simulator_soundness(tally):
    # runs last: pools the channel audits of every simulation above
    _report(acc.criterion_11(tally, CONSTS))
