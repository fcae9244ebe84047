"""Experiment configuration: YAML in, validated dataclasses out.

Example::

    algorithm: mis
    graph: {family: udg, area_side: 6.0}
    n: [32, 64, 128]
    seeds: 20
    constants: {C: 34, decay_iters: 23}
    output: results/mis
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import graphs as G
from .compete import CompeteConfig
from .graph import Graph
from .mis import MisConstants

ALGORITHMS = ("mis", "partition", "compete", "broadcast", "election", "analytics")


class ConfigError(ValueError):
    pass


# family -> (required params, optional params with defaults)
FAMILIES = {
    "gnp": (("n", "p"), {}),
    "udg": (("n",), {"area_side": None, "avg_degree": 8.0}),
    "quasi_udg": (("n", "r", "R"), {"area_side": None, "avg_degree": 8.0, "edge_prob": 0.5}),
    "unit_ball": (("n",), {"area_side": None, "avg_degree": 8.0, "dim": 2, "p": 2}),
    "geometric_radio": (("n",), {"area_side": None, "avg_degree": 8.0, "range_ratio": 1.5}),
    "grid": (("side",), {"radius": 1.0, "rows": None}),
    "path": (("n",), {}),
    "cycle": (("n",), {}),
    "complete": (("n",), {}),
    "star_of_paths": (("arms", "arm_length"), {}),
    "file": (("path",), {}),
}


def _side_for_degree(n: int, avg_degree: float, reach: float = 1.0) -> float:
    # expected degree of a uniform point ~ (n - 1) * pi reach^2 / side^2, ignoring borders
    return math.sqrt(max(n - 1, 1) * math.pi * reach ** 2 / avg_degree)


@dataclass(frozen=True)
class GraphSpec:
    family: str
    params: dict

    @classmethod
    def parse(cls, raw) -> "GraphSpec":
        if not isinstance(raw, dict) or "family" not in raw:
            raise ConfigError("graph needs a 'family' key")
        fam = raw["family"]
        if fam not in FAMILIES:
            raise ConfigError(f"unknown graph family {fam!r}; known: {sorted(FAMILIES)}")
        req, opt = FAMILIES[fam]
        params = {k: v for k, v in raw.items() if k != "family"}
        unknown = set(params) - set(req) - set(opt)
        if unknown:
            raise ConfigError(f"graph family {fam!r}: unknown keys {sorted(unknown)}")
        if fam == "unit_ball" and "p" in params:
            try:
                params["p"] = math.inf if float(params["p"]) == math.inf else int(params["p"])
            except (TypeError, ValueError):
                params["p"] = None
            if params["p"] not in (1, 2, math.inf):
                raise ConfigError(f"unit_ball p must be 1, 2 or inf, not {raw['p']!r}")
        return cls(fam, {**opt, **params})

    def with_n(self, n) -> "GraphSpec":
        if n is None:
            return self
        key = "side" if self.family == "grid" else "n"
        return GraphSpec(self.family, {**self.params, key: n})

    def missing(self) -> list:
        return [k for k in FAMILIES[self.family][0] if k not in self.params]

    @property
    def ident(self) -> str:
        parts = [self.family] + [f"{k}{v}" for k, v in sorted(self.params.items())
                                 if v is not None and k != "path"]
        if self.family == "file":
            parts.append(Path(self.params["path"]).stem)
        return "-".join(str(p) for p in parts)

    def build(self, seed: int) -> Graph:
        """The instance for ``seed`` (random families draw from a graph-only stream)."""
        p = self.params
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x6E,)))
        f = self.family
        if f == "gnp":
            return G.gen_gnp(p["n"], p["p"], rng)
        if f == "udg":
            side = p["area_side"] or _side_for_degree(p["n"], p["avg_degree"])
            return G.gen_udg(p["n"], side, rng)
        if f == "quasi_udg":
            side = p["area_side"] or _side_for_degree(p["n"], p["avg_degree"], p["R"])
            return G.gen_quasi_udg(p["n"], side, p["r"], p["R"], p["edge_prob"], rng)
        if f == "unit_ball":
            side = p["area_side"] or _side_for_degree(p["n"], p["avg_degree"])
            return G.gen_unit_ball(p["n"], side, rng, dim=p["dim"], p=p["p"])
        if f == "geometric_radio":
            side = p["area_side"] or _side_for_degree(p["n"], p["avg_degree"])
            ratio = p["range_ratio"]
            return G.gen_geometric_radio(p["n"], side, lambda r, k: r.uniform(1.0, ratio, size=k), rng)
        if f == "grid":
            return G.grid_udg(p["side"], radius=p["radius"], rows=p["rows"])
        if f == "path":
            return G.path_graph(p["n"])
        if f == "cycle":
            return G.cycle_graph(p["n"])
        if f == "complete":
            return G.complete_graph(p["n"])
        if f == "star_of_paths":
            return G.star_of_paths(p["arms"], p["arm_length"])
        if f == "file":
            path = Path(p["path"])
            return G.load_geometric_json(path) if path.suffix == ".json" else G.load_edge_list(path)
        raise ConfigError(f"unknown family {f}")


@dataclass(frozen=True)
class Constants:
    c: int = MisConstants.c
    C: int = MisConstants.C
    decay_iters: int = MisConstants.decay_iters
    kappa_icp: float = CompeteConfig.kappa_icp
    kappa_bg: float = CompeteConfig.kappa_bg
    kappa1: float = CompeteConfig.kappa1
    kappa2: float = CompeteConfig.kappa2
    kappa_c: float = 2.0
    inject: str = "start"
    background: bool = True

    @property
    def mis(self) -> MisConstants:
        return MisConstants(self.c, self.C, self.decay_iters)

    @property
    def compete(self) -> CompeteConfig:
        return CompeteConfig(self.mis, self.kappa_icp, self.kappa_bg, self.kappa1, self.kappa2,
                             self.background, self.inject)


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    graph: GraphSpec
    n: tuple = (None,)
    seeds: tuple = (0,)
    constants: Constants = field(default_factory=Constants)
    output: str = "results"
    jobs: int = 1
    alpha_mode: str = "greedy"
    stats_inflate: float = 1.0
    beta: float | None = None          # partition: shift rate (default D^-0.5)
    centers: str = "mis"               # partition: "mis" | "all"
    sample_nodes: int = 20             # analytics: nodes per instance
    diagnostics: bool = False          # mis: per-round CSV

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "algorithm" not in raw or raw["algorithm"] not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        if "graph" not in raw:
            raise ConfigError("config needs a 'graph' section")
        kw = dict(raw)
        kw["graph"] = GraphSpec.parse(raw["graph"])
        n = raw.get("n", None)
        kw["n"] = tuple(n) if isinstance(n, (list, tuple)) else (n,)
        seeds = raw.get("seeds", 1)
        if isinstance(seeds, int):
            if seeds < 1:
                raise ConfigError("seeds must be >= 1")
            kw["seeds"] = tuple(range(seeds))
        elif isinstance(seeds, (list, tuple)) and all(isinstance(s, int) for s in seeds):
            kw["seeds"] = tuple(seeds)
        else:
            raise ConfigError("seeds must be a count or a list of integers")
        consts = raw.get("constants") or {}
        cknown = {f.name for f in fields(Constants)}
        if set(consts) - cknown:
            raise ConfigError(f"unknown constants {sorted(set(consts) - cknown)}")
        kw["constants"] = Constants(**consts)
        try:
            kw["constants"].compete
        except ValueError as e:
            raise ConfigError(str(e)) from None
        cfg = cls(**kw)
        for n in cfg.n:
            miss = cfg.graph.with_n(n).missing()
            if miss:
                raise ConfigError(f"graph family {cfg.graph.family!r} needs {miss}")
        if cfg.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if cfg.alpha_mode not in ("greedy", "exact"):
            raise ConfigError("alpha_mode must be 'greedy' or 'exact'")
        if cfg.centers not in ("mis", "all"):
            raise ConfigError("centers must be 'mis' or 'all'")
        if cfg.stats_inflate < 1:
            raise ConfigError("stats_inflate must be >= 1")
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError(f"{path}: {e.strerror}") from None
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: {e}") from None
        return cls.from_dict(raw)
