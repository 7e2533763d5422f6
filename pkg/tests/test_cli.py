import json

import pytest

from divflow.cli import EXIT_DATA, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main
from divflow.constructions import construction_network
from divflow.graph import CandidateGraph, read_graph, read_solution, write_graph
from divflow.mcf import read_dimacs
from divflow.targets import uniform_target

from oracles import synthetic_ratings


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "r.dat").write_text(synthetic_ratings(7))
    code = main(["score", "--input", str(d / "r.dat"), "--min-user", "10", "--min-item", "3",
                 "--fold", "0", "--folds", "3", "--k", "20", "--c", "5",
                 "--out", str(d / "s.tsv"), "--graph-out", str(d / "g.tsv"),
                 "--relevant-out", str(d / "rel.tsv")])
    assert code == EXIT_OK
    return d


def test_ingest(work, capsys):
    assert main(["ingest", "--input", str(work / "r.dat"), "--min-user", "10", "--min-item", "3",
                 "--out", str(work / "canon.tsv")]) == EXIT_OK
    counts = json.loads(capsys.readouterr().err)
    assert counts["ratings"] == len((work / "canon.tsv").read_text().splitlines())


@pytest.mark.parametrize("mode", ["TOP", "AB", "AGG", "MIN", "GOL", "WGT", "GRD", "CDG-bin", "CDG-full", "2SLOPE"])
def test_diversify_modes(work, mode):
    out = work / f"sol-{mode}.tsv"
    summary = work / f"sum-{mode}.json"
    assert main(["diversify", "--graph", str(work / "g.tsv"), "--mode", mode,
                 "--out", str(out), "--summary", str(summary)]) == EXIT_OK
    g = read_graph(open(work / "g.tsv"))
    h = read_solution(open(out), g)
    assert h.is_feasible()
    assert json.loads(summary.read_text())["mode"] == mode


def test_gol_beats_top_then_evaluate(work):
    vals = {}
    for mode in ("TOP", "GOL"):
        sol = work / f"e-{mode}.tsv"
        main(["diversify", "--graph", str(work / "g.tsv"), "--mode", mode, "--out", str(sol),
              "--summary", str(work / "x.json")])
        assert main(["evaluate", "--graph", str(work / "g.tsv"), "--solution", str(sol),
                     "--relevant", str(work / "rel.tsv"), "--out", str(work / f"m-{mode}.json")]) == EXIT_OK
        vals[mode] = json.loads((work / f"m-{mode}.json").read_text())
    assert vals["GOL"]["discrepancy"] <= vals["TOP"]["discrepancy"]
    assert set(vals["GOL"]) == {"n", "discrepancy", "aggdiv", "gini", "entropy", "precision", "cg", "dcg"}


def test_category_mode(work):
    g = read_graph(open(work / "g.tsv"))
    cats = work / "cats.tsv"
    cats.write_text("".join(f"{j}\t{'ab'[j % 2]}\n" for j in range(g.n_items)))
    assert main(["diversify", "--graph", str(work / "g.tsv"), "--mode", "CAT", "--categories", str(cats),
                 "--out", str(work / "cat.tsv"), "--summary", str(work / "cat.json")]) == EXIT_OK
    assert "category_shortfall" in json.loads((work / "cat.json").read_text())


def test_export_dimacs_round_trip(work):
    out = work / "net.min"
    assert main(["export-dimacs", "--graph", str(work / "g.tsv"), "--mode", "WGT", "--mu", "0.5",
                 "--out", str(out)]) == EXIT_OK
    g = read_graph(open(work / "g.tsv"))
    expected = construction_network("weighted", g, uniform_target(g), mu=0.5)
    assert read_dimacs(out.read_text()).equals(expected)


def test_sweep(work, tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(f"dataset = {work / 'r.dat'}\nmin_user_ratings = 10\nmin_item_ratings = 3\n"
                   "k_grid = 10,20\nc = 5\nfolds = 3\nrun_folds = 2\n")
    assert main(["sweep", "--config", str(cfg), "--set", "modes=TOP,GOL,PC", "--out", str(tmp_path / "o")]) == 0
    rows = (tmp_path / "o" / "metrics.csv").read_text().splitlines()
    assert len(rows) == 1 + 3 * 2 * 2


def test_usage_errors(work, capsys):
    assert main([]) == EXIT_USAGE
    assert main(["diversify"]) == EXIT_USAGE
    assert main(["diversify", "--graph", str(work / "g.tsv"), "--mode", "NOPE"]) == EXIT_USAGE
    assert main(["diversify", "--graph", str(work / "g.tsv"), "--target", "blend:3"]) == EXIT_USAGE
    assert main(["diversify", "--graph", str(work / "g.tsv"), "--mode", "PC"]) == EXIT_USAGE
    assert main(["sweep", "--out", "x", "--set", "colour=red"]) == EXIT_USAGE
    assert main(["--help"]) == EXIT_OK
    assert "error" in capsys.readouterr().err


def test_data_errors(work, tmp_path):
    assert main(["diversify", "--graph", str(tmp_path / "missing.tsv")]) == EXIT_DATA
    bad = tmp_path / "bad.tsv"
    bad.write_text("#l=1 r=2 c=1\n0\tx\t0.5\n")
    assert main(["diversify", "--graph", str(bad)]) == EXIT_DATA
    junk = tmp_path / "junk.dat"
    junk.write_text("1::2\n")
    assert main(["ingest", "--input", str(junk)]) == EXIT_DATA


def test_infeasible_and_clamp(tmp_path):
    g = CandidateGraph(2, 3, [0, 0, 1], [0, 1, 2], [0.5, 0.4, 0.9], [2, 2])
    path = tmp_path / "g.tsv"
    path.write_text(write_graph(g))
    sol = tmp_path / "s.tsv"
    assert main(["diversify", "--graph", str(path), "--out", str(sol)]) == EXIT_INFEASIBLE
    assert main(["diversify", "--graph", str(path), "--clamp-display", "--out", str(sol),
                 "--summary", str(tmp_path / "j.json")]) == EXIT_OK
    h = read_solution(open(sol), read_graph(open(path)).with_display([2, 1]))
    assert h.pairs() == {(0, 0), (0, 1), (1, 2)}


def test_sweep_infeasible_exit_code(work, tmp_path):
    args = ["sweep", "--set", f"dataset={work / 'r.dat'}", "--set", "min_user_ratings=10",
            "--set", "min_item_ratings=3", "--set", "k_grid=60", "--set", "c=60", "--set", "folds=3",
            "--out", str(tmp_path / "o")]
    assert main(args) == EXIT_INFEASIBLE
    assert json.loads((tmp_path / "o" / "summary.json").read_text())["status"] == "aborted"
    assert main(args + ["--clamp-display"]) == EXIT_OK
