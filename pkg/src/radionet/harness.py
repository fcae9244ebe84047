"""Seeded experiment batches: one CSV row per (instance, seed) plus an
aggregate JSON with per-instance means, standard errors and fits."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy import stats as sstats

from . import analytics as A
from .clustering import fine_j_range, partition_ideal, partition_process
from .compete import compete
from .config import ExperimentConfig
from .engine import Engine
from .graphs import compute_stats
from .mis import DecayParams, check_mis, log_n, radio_mis
from .protocols import broadcast, leader_election

log = logging.getLogger(__name__)

CSV_VERSION = 1

COLUMNS = {
    "mis": ["graph_id", "seed", "n", "D", "alpha", "mis_size", "valid", "rounds_to_empty",
            "outer_rounds", "time_steps", "audit_violations", "max_payload_bits", "error"],
    "partition": ["graph_id", "seed", "n", "D", "alpha", "beta", "centers", "clusters", "max_radius",
                  "incomplete", "ideal_agreement", "rounds", "audit_violations", "error"],
    "compete": ["graph_id", "seed", "n", "D", "alpha", "candidates", "rounds_to_agreement", "budget",
                "success", "max_payload_bits", "audit_violations", "error"],
    "broadcast": ["graph_id", "seed", "n", "D", "alpha", "rounds_to_agreement", "budget", "success",
                  "max_payload_bits", "audit_violations", "error"],
    "election": ["graph_id", "seed", "n", "D", "alpha", "candidates", "leader", "rounds_to_agreement",
                 "budget", "success", "max_payload_bits", "audit_violations", "error"],
    "analytics": ["graph_id", "seed", "n", "D", "alpha", "v", "j", "beta", "S", "b", "s_j", "bad",
                  "spread_ratio", "error"],
}


def _base(gid, seed, st):
    return {"graph_id": gid, "seed": seed, "n": st.n, "D": st.D, "alpha": st.alpha}


def run_one(cfg: ExperimentConfig, n, seed: int) -> list[dict]:
    spec = cfg.graph.with_n(n)
    gid = spec.ident
    row = {"graph_id": gid, "seed": seed}
    try:
        g = spec.build(seed)
        st = compute_stats(g, cfg.alpha_mode)
        ps = st.inflate(cfg.stats_inflate)
        k = cfg.constants
        row = _base(gid, seed, st)
        if cfg.algorithm == "mis":
            r = radio_mis(g, ps, k.mis, seed, diagnostics=cfg.diagnostics)
            row.update(mis_size=len(r.mis), valid=check_mis(g, r.mis).valid,
                       rounds_to_empty=r.rounds_to_empty, outer_rounds=r.outer_rounds,
                       time_steps=r.time_steps, audit_violations=r.audit_violations,
                       max_payload_bits=r.max_payload_bits)
            if cfg.diagnostics:
                row["_diagnostics"] = [{"graph_id": gid, "seed": seed, **d} for d in r.diagnostics]
            return [row]
        if cfg.algorithm == "partition":
            return [_partition_row(g, ps, cfg, seed, row)]
        if cfg.algorithm == "compete":
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xC0,)))
            size = min(g.n, log_n(ps.n))
            S = {int(v): int(r) for v, r in zip(rng.choice(g.n, size, replace=False),
                                                rng.permutation(size))}
            r = compete(g, S, seed, ps, k.compete)
            row.update(candidates=len(S), rounds_to_agreement=r.rounds_to_agreement, budget=r.budget,
                       success=r.success, max_payload_bits=r.max_payload_bits,
                       audit_violations=r.audit_violations)
            return [row]
        if cfg.algorithm == "broadcast":
            r = broadcast(g, 0, b"radionet", seed, ps, k.compete)
            row.update(rounds_to_agreement=r.run.rounds_to_agreement, budget=r.run.budget,
                       success=r.success, max_payload_bits=r.run.max_payload_bits,
                       audit_violations=r.run.audit_violations)
            return [row]
        if cfg.algorithm == "election":
            r = leader_election(g, seed, ps, k.compete, k.kappa_c)
            row.update(candidates=len(r.candidates), leader=r.expected_leader, success=r.success,
                       rounds_to_agreement=None if r.run is None else r.run.rounds_to_agreement,
                       budget=None if r.run is None else r.run.budget,
                       max_payload_bits=None if r.run is None else r.run.max_payload_bits,
                       audit_violations=None if r.run is None else r.run.audit_violations)
            return [row]
        if cfg.algorithm == "analytics":
            return _analytics_rows(g, st, ps, cfg, seed, row)
    except Exception as e:  # recorded, batch continues
        log.warning("run %s seed %s failed: %s", gid, seed, e)
        row["error"] = f"{type(e).__name__}: {e}"
        return [row]
    raise AssertionError(cfg.algorithm)


def _partition_row(g, st, cfg, seed, row):
    k = cfg.constants
    D = max(st.D, 1)
    beta = cfg.beta if cfg.beta is not None else D ** -0.5
    if cfg.centers == "mis":
        centers = np.zeros(g.n, dtype=bool)
        centers[list(radio_mis(g, st, k.mis, seed, audit=False).mis)] = True
    else:
        centers = np.ones(g.n, dtype=bool)
    eng = Engine(g, seed)
    a = eng.run(partition_process(eng, centers, beta, st, DecayParams(k.decay_iters, log_n(st.n)), "harness"))
    cidx = np.flatnonzero(centers)
    ideal = partition_ideal(g, cidx, beta, shifts=a.shifts[cidx], quantized=True)
    radii = a.radii()
    row.update(beta=beta, centers=len(cidx), clusters=len(radii), max_radius=max(radii.values(), default=0),
               incomplete=a.incomplete, ideal_agreement=float(np.mean(ideal.center == a.center)),
               rounds=a.rounds, audit_violations=eng.audit_violations)
    return row


def _analytics_rows(g, st, ps, cfg, seed, row):
    mis = radio_mis(g, ps, cfg.constants.mis, seed, audit=False).mis
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xA7,)))
    vs = np.sort(rng.choice(g.n, min(cfg.sample_nodes, g.n), replace=False))
    out = []
    for v in vs:
        counts = A.mis_counts(g, mis, int(v), st.D)
        for j in fine_j_range(st.D):
            an = A.compute_analytics(g, mis, int(v), j, st.D, st.alpha, counts)
            out.append({**row, "v": int(v), "j": j, "beta": an.beta, "S": an.S, "b": an.b,
                        "s_j": an.s_j, "bad": an.bad, "spread_ratio": an.spread_ratio,
                        "_json": an.to_json()})
    return out or [row]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(round(x, 9))
    return str(x)


def linear_fit(x, y) -> dict:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if len(x) < 2 or np.ptp(x) == 0:
        return {"slope": None, "intercept": None, "r2": None}
    res = sstats.linregress(x, y)
    return {"slope": float(res.slope), "intercept": float(res.intercept), "r2": float(res.rvalue ** 2)}


def aggregate(cfg: ExperimentConfig, rows: list[dict]) -> dict:
    groups: dict = {}
    for r in rows:
        groups.setdefault(r["graph_id"], []).append(r)
    out = {"algorithm": cfg.algorithm, "csv_version": CSV_VERSION, "instances": {}}
    numeric = [c for c in COLUMNS[cfg.algorithm] if c not in ("graph_id", "seed", "error")]
    for gid, rs in groups.items():
        entry = {"runs": len(rs), "errors": sum(1 for r in rs if r.get("error"))}
        for c in numeric:
            vals = [float(r[c]) for r in rs if r.get(c) is not None and not r.get("error")]
            if vals:
                a = np.asarray(vals)
                entry[c] = {"mean": float(a.mean()),
                            "se": float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0}
        out["instances"][gid] = entry
    inst = [e for e in out["instances"].values() if "n" in e]
    if cfg.algorithm == "mis" and len(inst) >= 2:
        x = [math.log2(e["n"]["mean"]) for e in inst if "rounds_to_empty" in e]
        y = [e["rounds_to_empty"]["mean"] for e in inst if "rounds_to_empty" in e]
        out["fit_rounds_vs_log2n"] = linear_fit(x, y)
    if cfg.algorithm in ("compete", "broadcast", "election") and len(inst) >= 2:
        x = [e["D"]["mean"] for e in inst if "rounds_to_agreement" in e]
        y = [e["rounds_to_agreement"]["mean"] for e in inst if "rounds_to_agreement" in e]
        out["fit_rounds_vs_D"] = linear_fit(x, y)
    return out


def _job(args):
    cfg, n, seed = args
    return run_one(cfg, n, seed)


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Run every (n, seed) item, write ``results.csv`` and ``aggregate.json``
    (plus per-algorithm extras) under the output directory."""
    out = Path(out_dir or cfg.output)
    items = [(cfg, n, s) for n in cfg.n for s in cfg.seeds]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            batches = list(pool.map(_job, items))
    else:
        batches = [_job(it) for it in items]
    rows = [r for b in batches for r in b]
    try:
        out.mkdir(parents=True, exist_ok=True)
        cols = COLUMNS[cfg.algorithm]
        buf = io.StringIO()
        buf.write(f"# radionet-csv v{CSV_VERSION} algorithm={cfg.algorithm}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in cols])
        (out / "results.csv").write_text(buf.getvalue())
        diag = [d for r in rows for d in r.get("_diagnostics", [])]
        if diag:
            dcols = list(diag[0])
            buf = io.StringIO()
            buf.write(f"# radionet-csv v{CSV_VERSION} mis-rounds\n")
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(dcols)
            for d in diag:
                w.writerow([_fmt(d[c]) for c in dcols])
            (out / "mis_rounds.csv").write_text(buf.getvalue())
        js = [r["_json"] for r in rows if "_json" in r]
        if js:
            (out / "analytics.jsonl").write_text("\n".join(js) + "\n")
        agg = aggregate(cfg, rows)
        (out / "aggregate.json").write_text(json.dumps(agg, indent=2, sort_keys=True) + "\n")
    except OSError as e:
        raise OSError(f"writing results to {out}: {e.strerror or e}") from e
    return agg
