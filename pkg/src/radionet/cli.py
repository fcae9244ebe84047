"""Command line entry point: ``radionet <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import acceptance, graphs
from .config import ConfigError, ExperimentConfig, GraphSpec
from .graph import GraphError
from .harness import run_experiment
from .mis import MisConstants

COMMANDS = {"mis": "mis", "partition": "partition", "compete": "compete",
            "broadcast": "broadcast", "elect": "election", "analytics": "analytics"}


def _scalar(text: str):
    v = yaml.safe_load(text)
    return text if isinstance(v, (dict, list)) or v is None else v


def parse_graph(text: str) -> dict:
    """``family=udg,n=64,avg_degree=6`` -> graph mapping."""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise ConfigError(f"graph option {part!r} is not key=value")
        k, v = part.split("=", 1)
        out[k.strip()] = _scalar(v.strip())
    if "family" not in out:
        raise ConfigError("graph option needs family=<name>")
    return out


def _load_raw(args) -> dict:
    raw = {}
    if args.config:
        try:
            raw = yaml.safe_load(Path(args.config).read_text()) or {}
        except OSError as e:
            raise ConfigError(f"{args.config}: {e.strerror}") from None
        except yaml.YAMLError as e:
            raise ConfigError(f"{args.config}: {e}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{args.config}: config must be a mapping")
    if getattr(args, "graph", None):
        raw["graph"] = parse_graph(args.graph)
    if getattr(args, "n", None):
        raw["n"] = args.n
    if args.seed is not None:
        raw["seeds"] = [args.seed]
    if getattr(args, "seeds", None) is not None:
        raw["seeds"] = args.seeds
    if args.jobs is not None:
        raw["jobs"] = args.jobs
    if args.out is not None:
        raw["output"] = args.out
    return raw


def cmd_gen(args) -> int:
    raw = _load_raw(args)
    if "graph" not in raw:
        raise ConfigError("gen needs --graph or a config with a graph section")
    spec = GraphSpec.parse(raw["graph"])
    n = raw.get("n")
    spec = spec.with_n(n[0] if isinstance(n, list) else n)
    if spec.missing():
        raise ConfigError(f"graph family {spec.family!r} needs {spec.missing()}")
    seed = args.seed or 0
    g = spec.build(seed)
    out = Path(args.out or f"{spec.ident}-s{seed}.txt")
    try:
        if out.suffix == ".json":
            graphs.save_geometric_json(g, out, **_json_radii(spec))
        else:
            graphs.save_edge_list(g, out)
    except OSError as e:
        raise OSError(f"writing {out}: {e.strerror or e}") from e
    st = graphs.compute_stats(g)
    print(json.dumps({"file": str(out), **json.loads(st.to_json())}))
    return 0


def _json_radii(spec: GraphSpec) -> dict:
    if spec.family == "quasi_udg":
        return {"r": spec.params["r"], "R": spec.params["R"]}
    return {}


def cmd_run(args) -> int:
    raw = _load_raw(args)
    algo = COMMANDS[args.command]
    if raw.get("algorithm", algo) != algo:
        raise ConfigError(f"config algorithm {raw['algorithm']!r} does not match command {args.command!r}")
    raw["algorithm"] = algo
    cfg = ExperimentConfig.from_dict(raw)
    agg = run_experiment(cfg)
    errors = sum(e.get("errors", 0) for e in agg["instances"].values())
    print(json.dumps(agg, indent=2, sort_keys=True))
    print(f"wrote {Path(cfg.output) / 'results.csv'} and aggregate.json", file=sys.stderr)
    return 1 if errors else 0


def cmd_validate(args) -> int:
    consts = MisConstants(args.c, args.C, args.decay_iters)
    crit = None
    if args.criteria:
        crit = [int(c) for c in args.criteria.split(",")]
        if any(not 1 <= c <= 11 for c in crit):
            raise ConfigError("criteria are numbered 1..11")
    corpus = args.corpus
    if corpus is not None:
        acceptance.load_corpus_dir(corpus)   # fail fast on a missing or empty directory
    results = acceptance.run_all(crit, consts, corpus)
    failed = [r.number for r in results if not r.passed]
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(
            [{"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail,
              "seconds": round(r.seconds, 2), "metrics": r.metrics} for r in results],
            indent=2, default=str) + "\n")
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failed: {failed}" if failed else ""))
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radionet", description="Radio-network MIS, clustering and Compete experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, graph=True):
        sp.add_argument("--config", help="YAML experiment config")
        sp.add_argument("--seed", type=int, help="run a single seed")
        sp.add_argument("--out", help="output path")
        sp.add_argument("--jobs", type=int, help="parallel worker processes")
        if graph:
            sp.add_argument("--graph", help="inline graph, e.g. family=udg,n=128,avg_degree=8")
            sp.add_argument("--n", type=int, nargs="+", help="size sweep (grid: side length)")

    g = sub.add_parser("gen", help="generate one graph file (.txt edge list or .json geometry)")
    common(g)
    for name, algo in COMMANDS.items():
        sp = sub.add_parser(name, help=f"seeded {algo} batch: results.csv + aggregate.json")
        common(sp)
        sp.add_argument("--seeds", type=int, help="number of seeds (0..k-1)")
    v = sub.add_parser("validate", help="run the acceptance battery")
    common(v, graph=False)
    v.add_argument("--criteria", help="comma-separated subset, e.g. 3,4")
    v.add_argument("--corpus", help="extra directory of graph files for the analytics criteria")
    d = MisConstants()
    v.add_argument("--c", type=int, default=d.c, dest="c")
    v.add_argument("--C", type=int, default=d.C, dest="C")
    v.add_argument("--decay-iters", type=int, default=d.decay_iters)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "validate":
            return cmd_validate(args)
        return cmd_run(args)
    except (ConfigError, GraphError, OSError) as e:
        print(f"radionet: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
