"""The acceptance battery, shared by the test-suite and ``radionet validate``.

Every criterion returns a :class:`CriterionResult`; channel-audit totals from
all simulations are pooled in an :class:`AuditTally` and checked last.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import linregress

from . import analytics as A
from . import graphs as G
from .clustering import center_distances, fine_j_range, sample_center_distances
from .compete import CompeteConfig, compete
from .config import ConfigError, _side_for_degree
from .engine import Engine
from .graph import Graph
from .mis import (DecayParams, MisConstants, check_mis, decay_block, decay_hear_probability,
                  eed_block, log_n, radio_mis)
from .protocols import broadcast, leader_election

# largest S / (b 2^j) over good j seen on the built-in corpus, rounded up;
# a regression guard well inside the proof's explicit constant (2^7 + 6/b)
SPREAD_KAPPA = 0.5


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass
class AuditTally:
    runs: int = 0
    rounds: int = 0
    violations: int = 0
    replayed_rounds: int = 0
    replay_violations: int = 0

    def add(self, rounds_audited: int, violations: int) -> None:
        self.runs += 1
        self.rounds += rounds_audited
        self.violations += violations


def _seed(*parts) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(parts)))


# -- graph families --------------------------------------------------------------

def grid_for(n: int) -> Graph:
    """Near-square 4-neighbour grid with exactly n nodes (n a power of two)."""
    rows = 2 ** (int(math.log2(n)) // 2)
    return G.grid_udg(n // rows, rows=rows)


def mis_family(name: str, n: int, seed: int) -> Graph:
    rng = _seed(0x11, n, seed)
    if name == "gnp":
        return G.gen_gnp(n, 0.1, rng)
    if name == "grid":
        return grid_for(n)
    if name == "udg":
        return G.gen_udg(n, _side_for_degree(n, 8.0), rng)
    if name == "clique":
        return G.complete_graph(n)
    if name == "path":
        return G.path_graph(n)
    raise ValueError(name)


MIS_FAMILIES = ("gnp", "grid", "udg", "clique", "path")


def analytics_corpus(extra_dir=None) -> dict[str, Graph]:
    rng = _seed(0xC0, 1)
    corpus = {
        "path-256": G.path_graph(256),
        "grid-16x16": G.grid_udg(16),
        "gnp-256-0.05": G.connected_gnp(256, 0.05, rng),
        "king-17x17": G.grid_udg(17, radius=2 ** 0.5),
        "udg-256": G.connected_udg(256, _side_for_degree(256, 10.0), rng),
        "quasi-udg-256": G.gen_quasi_udg(256, _side_for_degree(256, 10.0, 1.3), 1.0, 1.3, 0.5, rng),
        "unit-ball-l1-256": G.gen_unit_ball(256, _side_for_degree(256, 8.0), rng, p=1),
        "unit-ball-linf-3d-256": G.gen_unit_ball(256, 5.0, rng, dim=3, p=np.inf),
        "geo-radio-256": G.gen_geometric_radio(256, _side_for_degree(256, 10.0),
                                               lambda r, k: r.uniform(1.0, 1.5, size=k), rng),
        "star-of-paths-200x4": G.star_of_paths(200, 4),
        "cycle-128": G.cycle_graph(128),
        "clique-64": G.complete_graph(64),
    }
    if extra_dir is not None:
        corpus.update(load_corpus_dir(extra_dir))
    return corpus


def load_corpus_dir(path) -> dict[str, Graph]:
    p = Path(path)
    if not p.is_dir():
        raise ConfigError(f"corpus directory {p} does not exist")
    files = sorted(f for f in p.iterdir() if f.suffix in (".txt", ".edges", ".json"))
    if not files:
        raise ConfigError(f"corpus directory {p} holds no graph files (.txt, .edges, .json)")
    return {f.stem: (G.load_geometric_json(f) if f.suffix == ".json" else G.load_edge_list(f))
            for f in files}


# -- criteria --------------------------------------------------------------------

def criterion_1(tally: AuditTally, consts=MisConstants(), seeds=50, sizes=(32, 64, 128, 256)):
    total = bad = 0
    failures = []
    for n in sizes:
        for fam in MIS_FAMILIES:
            for s in range(seeds):
                g = mis_family(fam, n, s)
                r = radio_mis(g, G.compute_stats(g), consts, seed=s)
                tally.add(r.rounds_audited, r.audit_violations)
                total += 1
                chk = check_mis(g, r.mis)
                if not chk.valid:
                    bad += 1
                    failures.append((fam, n, s, chk.report()))
    ok = bad == 0
    return CriterionResult(1, "MIS validity", ok, f"{total - bad}/{total} runs valid",
                           {"runs": total, "invalid": bad, "failures": failures[:5]})


def criterion_2(tally: AuditTally, consts=MisConstants(), seeds=30, sizes=(32, 64, 128, 256, 512)):
    means, ratios = [], []
    for n in sizes:
        rs, steps = [], []
        for s in range(seeds):
            g = G.gen_udg(n, _side_for_degree(n, 8.0), _seed(0x22, n, s))
            r = radio_mis(g, G.compute_stats(g), consts, seed=s)
            tally.add(r.rounds_audited, r.audit_violations)
            rs.append(r.rounds_to_empty if r.rounds_to_empty is not None else r.outer_rounds)
            steps.append(r.time_steps)
        means.append(float(np.mean(rs)))
        ratios.append(float(np.mean(steps)) / log_n(n) ** 3)
    fit = linregress(np.log2(sizes), means)
    r2 = float(fit.rvalue ** 2)
    band = max(ratios) / min(ratios)
    ok = r2 >= 0.9 and band <= 4
    return CriterionResult(2, "MIS round scaling", ok,
                           f"R^2={r2:.3f} (>=0.9), time-steps/log^3 n band={band:.2f} (<=4)",
                           {"mean_rounds": dict(zip(sizes, means)), "slope": float(fit.slope),
                            "r2": r2, "ratios": ratios, "band": band})


def _star_union(k: int, copies: int) -> Graph:
    """``copies`` disjoint stars with centre i*(k+1) and k leaves each."""
    edges = [(c * (k + 1), c * (k + 1) + j) for c in range(copies) for j in range(1, k + 1)]
    return Graph.from_edges(copies * (k + 1), edges)


def eed_frequencies(neigh_p, p_v, calls, C, n, seed, tally: AuditTally | None = None, batch=1000):
    """Fraction of ``calls`` EED calls at a star centre returning HIGH."""
    k = len(neigh_p)
    highs = 0
    L = log_n(n)
    done = 0
    while done < calls:
        copies = min(batch, calls - done)
        g = _star_union(k, copies)
        p = np.tile(np.r_[p_v, neigh_p], copies)
        eng = Engine(g, seed * 1_000_003 + done)
        active = np.ones(g.n, dtype=bool)
        high = eng.run(eed_block(eng, eng.rng("eed"), active, p, C, L))
        centres = np.arange(copies) * (k + 1)
        highs += int(high[centres].sum())
        if tally is not None:
            tally.add(eng.rounds_audited, eng.audit_violations)
        done += copies
    return highs / calls


EED_HIGH_CASES = {"4 nbrs at 1/2 (d=2)": [0.5] * 4, "2 nbrs at 1/2 (d=1)": [0.5] * 2}
EED_LOW_CASES = {"1 nbr at 2^-10 (d~0.001)": [2.0 ** -10], "1 nbr at 2^-7 (d~0.008)": [2.0 ** -7]}


def criterion_3(tally: AuditTally, consts=MisConstants(), calls=10_000, n=256):
    need = 1 - 1 / n
    freqs = {}
    ok = True
    for i, (name, ps) in enumerate(EED_HIGH_CASES.items()):
        f = eed_frequencies(ps, 0.5, calls, consts.C, n, 300 + i, tally)
        freqs[f"HIGH {name}"] = f
        ok &= f >= need
    for i, (name, ps) in enumerate(EED_LOW_CASES.items()):
        f = 1 - eed_frequencies(ps, 0.5, calls, consts.C, n, 400 + i, tally)
        freqs[f"LOW {name}"] = f
        ok &= f >= need
    worst = min(freqs.values())
    return CriterionResult(3, "EstimateEffectiveDegree", ok,
                           f"worst correct-verdict frequency {worst:.4f} (>= {need:.4f}), C={consts.C}",
                           {"frequencies": freqs, "C": consts.C})


def decay_frequency(k: int, trials: int, n: int, seed: int, tally: AuditTally | None = None, batch=2000):
    """Monte-Carlo P[a star centre with k holding leaves hears in one Decay iteration]."""
    params = DecayParams(1, log_n(n))
    heard = 0
    done = 0
    while done < trials:
        copies = min(batch, trials - done)
        g = _star_union(k, copies)
        holders = np.ones(g.n, dtype=bool)
        centres = np.arange(copies) * (k + 1)
        holders[centres] = False
        eng = Engine(g, seed * 1_000_003 + done)
        senders = eng.run(decay_block(eng, eng.rng("decay"), holders, params))
        heard += int((senders[:, centres] >= 0).any(axis=0).sum())
        if tally is not None:
            tally.add(eng.rounds_audited, eng.audit_violations)
        done += copies
    return heard / trials


def criterion_4(tally: AuditTally, trials=10_000, sizes=(1, 2, 8, 64), n=256):
    rows = {}
    ok = True
    for k in sizes:
        mc = decay_frequency(k, trials, n, 500 + k, tally)
        exact = decay_hear_probability(k, log_n(n))
        rows[k] = (mc, exact)
        ok &= abs(mc - exact) <= 0.02
    worst = max(abs(a - b) for a, b in rows.values())
    return CriterionResult(4, "Decay hearing probability", ok,
                           f"max |MC - closed form| = {worst:.4f} (<= 0.02)", {"k": rows})


def _distance_graphs():
    rng = _seed(0x55, 0)
    return {"path-256": G.path_graph(256), "grid-16x16": G.grid_udg(16),
            "gnp-256-0.05": G.connected_gnp(256, 0.05, rng)}


def criterion_5(tally: AuditTally, consts=MisConstants(), trials=10_000, sample=20):
    checks = 0
    fails = []
    margin = np.inf
    for gi, (name, g) in enumerate(_distance_graphs().items()):
        st = G.compute_stats(g)
        r = radio_mis(g, st, consts, seed=gi)
        tally.add(r.rounds_audited, r.audit_violations)
        mis = np.array(sorted(r.mis))
        rng = _seed(0x56, gi)
        vs = np.sort(rng.choice(g.n, sample, replace=False))
        dist = center_distances(g, mis)[:, vs]
        for j in fine_j_range(st.D):
            beta = 2.0 ** -j
            sampled = None
            for col, v in enumerate(vs):
                counts = A.mis_counts(g, r.mis, int(v), st.D)
                b = A.b_value(st.alpha, st.D)
                if A.bad_witness(counts, j, b) is not None:
                    continue
                if sampled is None:
                    sampled = sample_center_distances(dist, beta, trials, _seed(0x57, gi, j))
                x = sampled[:, col]
                mean = float(x.mean())
                se = float(x.std(ddof=1) / math.sqrt(trials))
                S = A.t_b_s(counts, beta)[2]
                bound = 5 * S + 3 * se
                checks += 1
                margin = min(margin, bound - mean)
                if mean > bound:
                    fails.append((name, int(v), j, mean, S))
    ok = not fails and checks > 0
    return CriterionResult(5, "expected distance <= 5 S", ok,
                           f"{checks - len(fails)}/{checks} (graph, v, good j) checks hold, "
                           f"smallest slack {margin:.3f}", {"failures": fails[:5], "checks": checks})


def _corpus_mis(corpus, consts, tally):
    out = {}
    for gi, (name, g) in enumerate(corpus.items()):
        st = G.compute_stats(g)
        r = radio_mis(g, st, consts, seed=gi)
        tally.add(r.rounds_audited, r.audit_violations)
        out[name] = (g, st, r.mis, check_mis(g, r.mis).valid)
    return out


def criterion_6(tally: AuditTally, consts=MisConstants(), corpus=None, _cache=None):
    data = _cache if _cache is not None else _corpus_mis(corpus or analytics_corpus(), consts, tally)
    pairs = worst = 0
    fails = []
    min_good = 1.0
    for name, (g, st, mis, valid) in data.items():
        if not valid:
            fails.append((name, "MIS invalid"))
            continue
        for v in range(g.n):
            bad = A.count_bad_j(g, mis, v, st.D, st.alpha)
            pairs += 1
            worst = max(worst, len(bad))
            frac = A.good_fraction(bad, st.D)
            min_good = min(min_good, frac)
            if len(bad) > 0.02 * math.log2(max(st.D, 1)) or frac < 0.77:
                fails.append((name, v, sorted(bad)))
    ok = not fails
    return CriterionResult(6, "bad-j count", ok,
                           f"{pairs} (graph, v) pairs; max |bad| = {worst}; min good fraction {min_good:.2f}",
                           {"failures": fails[:5], "pairs": pairs})


def spread_ratios(data) -> tuple[float, float]:
    """(largest S / (b 2^j) over good j, smallest proof constant among the graphs)."""
    top = 0.0
    proof = np.inf
    for g, st, mis, valid in data.values():
        b = A.b_value(st.alpha, st.D)
        proof = min(proof, A.spread_proof_constant(b))
        for v in range(g.n):
            counts = A.mis_counts(g, mis, v, st.D)
            for j in fine_j_range(st.D):
                if A.bad_witness(counts, j, b) is None:
                    S = A.t_b_s(counts, 2.0 ** -j)[2]
                    top = max(top, S / (b * 2 ** j))
    return top, proof


def criterion_7(tally: AuditTally, consts=MisConstants(), corpus=None, _cache=None):
    data = _cache if _cache is not None else _corpus_mis(corpus or analytics_corpus(), consts, tally)
    top, proof = spread_ratios(data)
    ok = top <= SPREAD_KAPPA and top <= proof
    return CriterionResult(7, "S / (b 2^j) bounded", ok,
                           f"kappa = {top:.4f} (frozen guard {SPREAD_KAPPA}, proof constant {proof:.2f})",
                           {"kappa": top, "guard": SPREAD_KAPPA, "proof_constant": proof})


def criterion_8(tally: AuditTally, config: CompeteConfig | None = None, seeds=100):
    msg = b"\x00radio\xffbroadcast\x01"
    out = {}
    ok = True
    for name, g in (("grid-16x16", G.grid_udg(16)), ("path-256", G.path_graph(256))):
        st = G.compute_stats(g)
        wins = 0
        faithful = True
        rounds = []
        for s in range(seeds):
            r = broadcast(g, 0, msg, seed=s, stats=st, config=config)
            tally.add(r.run.rounds_audited, r.run.audit_violations)
            if r.success:
                wins += 1
                rounds.append(r.run.rounds_to_agreement)
                faithful &= all(m == msg for m in r.outputs)
        out[name] = {"successes": wins, "mean_rounds": float(np.mean(rounds)) if rounds else None,
                     "budget": r.run.budget}
        ok &= wins >= 99 * seeds / 100 and faithful
    detail = "; ".join(f"{k}: {v['successes']}/{seeds}" for k, v in out.items())
    return CriterionResult(8, "broadcast", ok, detail + " (>= 99%), payload exact", out)


def criterion_9(tally: AuditTally, config: CompeteConfig | None = None, seeds=100):
    out = {}
    ok = True
    for name, g in (("clique-64", G.complete_graph(64)), ("grid-16x16", G.grid_udg(16))):
        st = G.compute_stats(g)
        wins = 0
        max_rank_ok = True
        sizes_ok = 0
        for s in range(seeds):
            e = leader_election(g, seed=s, stats=st, config=config)
            if e.run is not None:
                tally.add(e.run.rounds_audited, e.run.audit_violations)
            wins += e.success
            sizes_ok += 1 <= len(e.candidates) <= 10 * log_n(g.n)
            agreed = {x for x in e.leader}
            if len(agreed) == 1 and None not in agreed:
                max_rank_ok &= agreed == {e.expected_leader}
        out[name] = {"successes": wins, "candidate_size_ok": sizes_ok}
        ok &= wins >= 99 * seeds / 100 and sizes_ok >= 99 * seeds / 100 and max_rank_ok
    detail = "; ".join(f"{k}: {v['successes']}/{seeds} agreed, |C| in range {v['candidate_size_ok']}/{seeds}"
                       for k, v in out.items())
    return CriterionResult(9, "leader election", ok, detail + " (>= 99%), winner = max rank", out)


REGIME_GRIDS = (9, 17, 33)        # king graphs: D = 8, 16, 32
REGIME_STAR = (200, 4)            # star of paths at D = 8


def regime_rounds(g: Graph, seeds, tally: AuditTally, config: CompeteConfig):
    st = G.compute_stats(g)
    rs = []
    for s in range(seeds):
        r = compete(g, {0: 1}, seed=s, stats=st, config=config)
        tally.add(r.rounds_audited, r.audit_violations)
        if r.rounds_to_agreement is not None:
            rs.append(r.rounds_to_agreement)
    return st, rs


def criterion_10(tally: AuditTally, consts=MisConstants(), seeds=10):
    cfg = CompeteConfig(mis=consts, inject="propagation")
    Ds, means = [], []
    incomplete = 0
    for side in REGIME_GRIDS:
        st, rs = regime_rounds(G.grid_udg(side, radius=2 ** 0.5), seeds, tally, cfg)
        incomplete += seeds - len(rs)
        Ds.append(st.D)
        means.append(float(np.mean(rs)))
    fit = linregress(Ds, means)
    r2 = float(fit.rvalue ** 2)
    star = G.star_of_paths(*REGIME_STAR)
    st_s, rs_s = regime_rounds(star, seeds, tally, cfg)
    incomplete += seeds - len(rs_s)
    base = means[Ds.index(st_s.D)] if st_s.D in Ds else None
    ratio = float(np.mean(rs_s)) / base if base else float("nan")
    ok = r2 >= 0.85 and ratio >= 1.5 and incomplete == 0
    return CriterionResult(10, "Compete round regimes", ok,
                           f"grid rounds vs D: R^2={r2:.3f} (>=0.85); star/grid at D={st_s.D}: "
                           f"{ratio:.2f} (>=1.5)",
                           {"D": Ds, "grid_means": means, "slope": float(fit.slope), "r2": r2,
                            "star_mean": float(np.mean(rs_s)), "ratio": ratio,
                            "log_D_alpha": {"grid": math.log(G.compute_stats(G.grid_udg(9, radius=2 ** 0.5)).alpha) / math.log(8),
                                            "star": math.log(st_s.alpha) / math.log(st_s.D)},
                            "incomplete": incomplete})


def criterion_11(tally: AuditTally, consts=MisConstants()):
    """Pooled audit of every simulated round, plus a per-node replay of
    recorded traces through the reference channel."""
    replay = [G.path_graph(12), G.complete_graph(9), G.gen_gnp(24, 0.2, _seed(0x77, 0))]
    for i, g in enumerate(replay):
        eo = []
        r = radio_mis(g, G.compute_stats(g), consts, seed=i, record=True, engine_out=eo)
        tally.add(r.rounds_audited, r.audit_violations)
        tr = eo[0].trace
        tally.replayed_rounds += sum(len(c[0]) for c in tr.chunks)
        tally.replay_violations += tr.replay_violations(g)
    g = G.path_graph(10)
    eo = []
    res = compete(g, {0: 0, 9: 1}, seed=1, engine_out=eo)
    tally.add(res.rounds_audited, res.audit_violations)
    ok = tally.violations == 0 and tally.replay_violations == 0 and tally.rounds > 0
    return CriterionResult(11, "simulator soundness", ok,
                           f"{tally.rounds} rounds audited over {tally.runs} runs, {tally.violations} violations; "
                           f"{tally.replayed_rounds} rounds replayed per node, {tally.replay_violations} mismatches",
                           {"runs": tally.runs, "rounds": tally.rounds, "violations": tally.violations})


def run_all(criteria=None, consts=MisConstants(), corpus_dir=None, log=print) -> list[CriterionResult]:
    """Run the selected criteria (default all, in order), printing one line each."""
    chosen = sorted(set(criteria or range(1, 12)))
    tally = AuditTally()
    cache = None
    results = []
    for c in chosen:
        t = time.time()
        if c in (6, 7):
            if cache is None:
                cache = _corpus_mis(analytics_corpus(corpus_dir), consts, tally)
            res = (criterion_6 if c == 6 else criterion_7)(tally, consts, _cache=cache)
        elif c in (8, 9):
            res = (criterion_8 if c == 8 else criterion_9)(tally, CompeteConfig(mis=consts))
        elif c == 11:
            res = criterion_11(tally, consts)
        elif c == 4:
            res = criterion_4(tally)
        else:
            res = globals()[f"criterion_{c}"](tally, consts)
        res.seconds = time.time() - t
        results.append(res)
        if log:
            log(res.line())
    return results
