import csv
import json
import math

import pytest

from radionet import graphs as G
from radionet.cli import main, parse_graph
from radionet.config import ConfigError, ExperimentConfig
from radionet.harness import run_experiment


def _rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# radionet-csv v1")
    return list(csv.DictReader(lines[1:]))


def cfg(**kw):
    base = {"algorithm": "mis", "graph": {"family": "path"}, "n": [16], "seeds": 2}
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown config keys"):
        cfg(colour="blue")
    with pytest.raises(ConfigError, match="unknown keys"):
        cfg(graph={"family": "udg", "n": 10, "radius": 2})
    with pytest.raises(ConfigError, match="unknown constants"):
        cfg(constants={"gamma": 1})


@pytest.mark.parametrize("bad", [
    {"algorithm": "sort"},
    {"graph": {"n": 5}},
    {"graph": {"family": "gnp"}, "n": [10]},
    {"seeds": 0},
    {"jobs": 0},
    {"constants": {"inject": "never"}},
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        cfg(**bad)


@pytest.mark.parametrize("given,want", [("inf", math.inf), (math.inf, math.inf), (1, 1), ("2", 2)])
def test_unit_ball_metric_normalised(given, want):
    c = cfg(graph={"family": "unit_ball", "p": given}, n=[30])
    assert c.graph.params["p"] == want
    assert c.graph.with_n(30).build(0).n == 30


def test_unit_ball_bad_metric():
    with pytest.raises(ConfigError, match="1, 2 or inf"):
        cfg(graph={"family": "unit_ball", "p": 3}, n=[30])


def test_yaml_load(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("algorithm: mis\ngraph: {family: grid, radius: 1.0}\nn: [4, 5]\nseeds: [3, 7]\n")
    c = ExperimentConfig.load(p)
    assert c.n == (4, 5) and c.seeds == (3, 7)
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.yaml")


def test_mis_sweep_rows_and_fit(tmp_path):
    c = cfg(graph={"family": "path"}, n=[32, 64, 128, 256, 512], seeds=100, output=str(tmp_path))
    agg = run_experiment(c)
    rows = _rows(tmp_path / "results.csv")
    assert len(rows) == 500 and all(r["valid"] == "1" for r in rows)
    fit = agg["fit_rounds_vs_log2n"]
    assert fit["slope"] is not None and 0 <= fit["r2"] <= 1
    assert agg["instances"]["path-n32"]["runs"] == 100


def test_analytics_json_per_v_and_j(tmp_path):
    c = cfg(algorithm="analytics", graph={"family": "grid"}, n=[16], seeds=1, sample_nodes=5,
            output=str(tmp_path))
    run_experiment(c)
    docs = [json.loads(x) for x in (tmp_path / "analytics.jsonl").read_text().splitlines()]
    assert len(docs) == 5 and all({"S", "bad", "v", "j"} <= set(d) for d in docs)


@pytest.mark.parametrize("algo", ["mis", "partition", "broadcast", "election", "compete"])
def test_same_seeds_byte_identical(tmp_path, algo):
    c1 = cfg(algorithm=algo, graph={"family": "grid"}, n=[5], output=str(tmp_path / "a"))
    c2 = cfg(algorithm=algo, graph={"family": "grid"}, n=[5], output=str(tmp_path / "b"))
    run_experiment(c1)
    run_experiment(c2)
    for f in ("results.csv", "aggregate.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_failed_runs_recorded_batch_continues(tmp_path):
    c = cfg(graph={"family": "file", "path": str(tmp_path / "nope.txt")}, n=[None], output=str(tmp_path / "o"))
    agg = run_experiment(c)
    rows = _rows(tmp_path / "o" / "results.csv")
    assert len(rows) == 2 and all(r["error"] for r in rows)
    assert agg["instances"][rows[0]["graph_id"]]["errors"] == 2


def test_output_error_names_the_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match=str(blocker)):
        run_experiment(cfg(output=str(blocker / "sub")))


def test_input_graph_file_untouched(tmp_path):
    g = G.grid_udg(4)
    p = tmp_path / "g.txt"
    G.save_edge_list(g, p)
    before = p.read_bytes()
    run_experiment(cfg(graph={"family": "file", "path": str(p)}, n=[None], output=str(tmp_path / "o")))
    assert p.read_bytes() == before


def test_parallel_matches_serial(tmp_path):
    a = run_experiment(cfg(n=[8, 12], seeds=3, output=str(tmp_path / "s")))
    b = run_experiment(cfg(n=[8, 12], seeds=3, jobs=2, output=str(tmp_path / "p")))
    assert a == b
    assert (tmp_path / "s" / "results.csv").read_bytes() == (tmp_path / "p" / "results.csv").read_bytes()


# -- CLI ---------------------------------------------------------------------

def test_parse_graph():
    assert parse_graph("family=udg,n=64,avg_degree=6.5") == {"family": "udg", "n": 64, "avg_degree": 6.5}
    with pytest.raises(ConfigError):
        parse_graph("n=4")


def test_cli_gen_and_mis(tmp_path, capsys):
    out = tmp_path / "g.txt"
    assert main(["gen", "--graph", "family=grid,side=5", "--out", str(out)]) == 0
    assert G.load_edge_list(out).n == 25
    assert main(["mis", "--graph", f"family=file,path={out}", "--seeds", "2", "--out", str(tmp_path / "m")]) == 0
    assert len(_rows(tmp_path / "m" / "results.csv")) == 2


def test_cli_config_file(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(f"graph: {{family: path}}\nn: [12]\nseeds: 2\noutput: {tmp_path / 'o'}\n")
    assert main(["broadcast", "--config", str(p)]) == 0
    assert main(["elect", "--config", str(p), "--seed", "4", "--out", str(tmp_path / "e")]) == 0
    assert _rows(tmp_path / "e" / "results.csv")[0]["seed"] == "4"


def test_cli_algorithm_mismatch(tmp_path, capsys):
    p = tmp_path / "c.yaml"
    p.write_text("algorithm: mis\ngraph: {family: path, n: 5}\n")
    assert main(["partition", "--config", str(p)]) == 2
    assert "does not match" in capsys.readouterr().err


def test_cli_validate_fault_injection(capsys):
    assert main(["validate", "--criteria", "3", "--C", "1"]) == 1
    assert "[FAIL]" in capsys.readouterr().out


def test_cli_validate_subset_passes(tmp_path):
    assert main(["validate", "--criteria", "4", "--out", str(tmp_path / "v.json")]) == 0
    assert json.loads((tmp_path / "v.json").read_text())[0]["passed"] is True


def test_cli_validate_empty_corpus(tmp_path, capsys):
    assert main(["validate", "--corpus", str(tmp_path)]) == 2
    assert "holds no graph files" in capsys.readouterr().err
