import numpy as np
import pytest

from tamlearn import experiment as ex
from tamlearn.bn import TabularBN
from tamlearn.cli import main
from tamlearn.estimators import Dataset
from tamlearn.graph import Dag, shd


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_graph_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert run(capsys, "gen-graph", "--kind", "tree", "--d", 10, "--seed", 7, "-o", a)[0] == 0
    assert run(capsys, "gen-graph", "--kind", "tree", "--d", 10, "--seed", 7, "-o", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(Dag.from_edge_list(a.read_text()).edges) == 9


def test_gen_graph_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "g.cfg"
    cfg.write_text("kind=er\nd=6\nedges=4\nseed=3\n")
    _, from_cfg, _ = run(capsys, "gen-graph", "--config", cfg)
    _, override, _ = run(capsys, "gen-graph", "--config", cfg, "--d", 8)
    assert from_cfg.startswith("d=6") and override.startswith("d=8")


def test_pipeline_learn_shd_matches_recomputation(tmp_path, capsys):
    g, bn, data, trace, learned = (tmp_path / x for x in ("g.txt", "bn.txt", "d.csv", "t.txt", "l.txt"))
    assert run(capsys, "gen-graph", "--kind", "tree", "--d", 6, "--seed", 2, "-o", g)[0] == 0
    assert run(capsys, "compile-model", "--graph", g, "--model", "mod", "--p", 0.2, "-o", bn)[0] == 0
    assert run(capsys, "sample", "--bn", bn, "--n", 3000, "--seed", 4, "-o", data)[0] == 0
    assert Dataset.load(data).n == 3000
    code, _, _ = run(capsys, "learn", "--data", data, "--truth", g, "--trace", trace, "-o", learned)
    assert code == 0
    text = learned.read_text()
    printed = int(text.strip().splitlines()[-1].split("=")[1])
    assert printed == shd(Dag.from_edge_list(text), Dag.from_edge_list(g.read_text()))
    assert trace.read_text().startswith("thresholds")


def test_learn_exact_certified(tmp_path, capsys):
    bn = tmp_path / "m1.txt"
    run(capsys, "compile-model", "--fixture", "ExampleC3-M1", "-o", bn)
    code, out, _ = run(capsys, "learn", "--bn", bn, "--certified", "--truth", bn)
    assert code == 0 and out.strip().endswith("# shd=0")


def test_verify_m2_reports_empty_witness(capsys):
    code, out, _ = run(capsys, "verify", "--fixture", "ExampleC3-M2")
    assert code == 0
    assert "  node 3:\n    j 0: -\n" in out
    assert "certified_kappa:" in out


def test_sweep_and_report(tmp_path, capsys):
    cfg, res, agg, svg = (tmp_path / x for x in ("s.cfg", "r.csv", "a.csv", "p.svg"))
    cfg.write_text("graphs=tree\nmodels=mod\nd=5\nn=200,800\nreps=2\nseed=3\n")
    assert run(capsys, "sweep", "--config", cfg, "--reps", 3, "-o", res)[0] == 0
    rows = ex.read_results(open(res))
    assert len(rows) == 6
    code, _, _ = run(capsys, "report", res, "-o", agg, "--plot", svg)
    assert code == 0 and agg.read_text().startswith("graph,model,d,n")
    assert svg.exists()


def test_report_assert_monotone_exit_code(tmp_path, capsys):
    res = tmp_path / "r.csv"
    res.write_text(
        "graph,model,d,n,rep,seed,shd,layer_acc,omega,kappa,estimator,variant,runtime_ms,error\n"
        "tree,mod,5,100,0,1,0,1,0.001,0.005,plugin,simple,1,\n"
        "tree,mod,5,400,0,1,3,1,0.001,0.005,plugin,simple,1,\n"
    )
    code, _, err = run(capsys, "report", res, "--assert-monotone")
    assert code == 3 and "non-monotone" in err


@pytest.mark.parametrize(
    "argv, expected",
    [
        (["sweep", "--reps", "0"], 1),
        (["gen-graph", "--kind", "tree"], 1),
        (["learn"], 1),
        (["nonsense"], 1),
        (["learn", "--data", "/nonexistent.csv"], 2),
    ],
)
def test_exit_codes(argv, expected, capsys):
    code, _, err = run(capsys, *argv)
    assert code == expected
    if expected == 2:
        assert len(err.strip().splitlines()) == 1


def test_malformed_files(tmp_path, capsys):
    bad_bn = tmp_path / "bad.txt"
    bad_bn.write_text("d=2\nsupports=2 2\n")
    code, _, err = run(capsys, "sample", "--bn", bad_bn, "--n", 5)
    assert code == 2 and len(err.strip().splitlines()) == 1
    bad_graph = tmp_path / "g.txt"
    bad_graph.write_text("0 1\n")
    assert run(capsys, "compile-model", "--graph", bad_graph)[0] == 2


def test_compile_random_model_roundtrips(tmp_path, capsys):
    g, bn = tmp_path / "g.txt", tmp_path / "bn.txt"
    run(capsys, "gen-graph", "--kind", "er", "--d", 5, "--seed", 1, "-o", g)
    assert run(capsys, "compile-model", "--graph", g, "--model", "random", "--seed", 3, "-o", bn)[0] == 0
    net = TabularBN.from_text(bn.read_text())
    assert net.strictly_positive and np.all(np.isfinite(net.cpts[0]))
