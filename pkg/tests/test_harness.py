import json

import numpy as np
import pytest

from divflow import harness
from divflow.constructions import two_pass
from divflow.errors import InfeasibleError
from divflow.graph import indegree_vector
from divflow.harness import (
    COLUMNS,
    ConfigError,
    ExperimentConfig,
    StageError,
    batch_slices,
    category_spec,
    emit_outputs,
    load_config,
    metrics_csv,
    parse_config,
    popularity_bins,
    rows_from_summary,
    run_experiment,
    solve_batched,
)
from divflow.targets import uniform_target

from oracles import random_graph, synthetic_ratings

ALL_MODES = "TOP,AGG,PC,FD,AB,GOL,WGT,GRD,CDG-bin,CDG-full,CAT,2SLOPE"


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "ratings.dat"
    path.write_text(synthetic_ratings(3))
    return str(path)


def config(data, **kw):
    base = dict(dataset=data, min_user_ratings=10, min_item_ratings=3, k_grid=(10, 20, 40), c=5,
                folds=3, run_folds=2, modes=("TOP", "GOL"))
    return ExperimentConfig(**{**base, **kw})


def l1(rows, target, mode, k):
    return [r["discrepancy"] for r in rows if (r["target"], r["mode"], r["k"]) == (target, mode, k)]


def test_parse_config_types_and_overrides():
    cfg = parse_config("""
        # comment
        dataset = x.dat
        k_grid = 10, 20   # trailing
        modes = TOP,GOL,WGT
        mu = 0.5,2
        inverted = no
        """, ["c=4", "user-batches=2"])
    assert cfg.k_grid == (10, 20) and cfg.c == 4 and cfg.user_batches == 2
    assert cfg.inverted is False
    assert cfg.mode_labels() == ["TOP", "GOL", "WGT(0.5)", "WGT(2)"]


@pytest.mark.parametrize("text", ["nokey", "color=red", "c=ten", "inverted=maybe", "folds=1",
                                  "k_grid=5,20", "modes=TOP,XYZ", "target=zipf", "recommender=imported",
                                  "greedy_q=0.5", "modes=TOP,TOP"])
def test_bad_config(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_target_labels():
    cfg = ExperimentConfig(target=("uniform", "blend"), alphas=(0.0, 0.25))
    assert cfg.target_labels() == ["uniform", "blend(0)", "blend(0.25)"]


def test_load_config_resolves_paths(tmp_path, monkeypatch):
    (tmp_path / "sub").mkdir()
    cfg_file = tmp_path / "sub" / "exp.cfg"
    cfg_file.write_text("dataset = r.dat\n")
    assert load_config(cfg_file).dataset == str(tmp_path / "sub" / "r.dat")
    monkeypatch.chdir(tmp_path)
    assert load_config(cfg_file, ["dataset=other.dat"]).dataset == str(tmp_path / "other.dat")


def test_fingerprint(data, tmp_path):
    a = config(data)
    assert a.fingerprint() == config(data).fingerprint()
    assert a.fingerprint() != config(data, c=4).fingerprint()
    copy = tmp_path / "r.dat"
    copy.write_text(open(data).read())
    f1 = config(str(copy)).fingerprint()
    copy.write_text(open(data).read() + "999::1::5::0\n")
    assert config(str(copy)).fingerprint() != f1


def test_smoke_top_on_toy(tmp_path):
    lines = [f"{u}::{i}::{1 + (u * i) % 5}::0" for u in range(5) for i in range(u, u + 4)]
    path = tmp_path / "toy.dat"
    path.write_text("\n".join(lines) + "\n")
    assert len(lines) == 20
    cfg = ExperimentConfig(dataset=str(path), min_user_ratings=0, min_item_ratings=0, k_grid=(2,), c=1,
                           folds=2, modes=("TOP",), clamp_display=True)
    rec = run_experiment(cfg)
    assert [r["fold"] for r in rec.rows] == [0, 1]
    assert all(0.0 <= r["precision"] <= 1.0 for r in rec.rows)


def test_gol_dominates_every_mode(data):
    cfg = config(data, modes=tuple(ALL_MODES.split(",")), target=("uniform", "blend"), alphas=(0.0, 0.5))
    rec = run_experiment(cfg)
    assert len(rec.rows) == 2 * 3 * 3 * 12
    for r in rec.rows:
        gol = l1(rec.rows, r["target"], "GOL", r["k"])[r["fold"]]
        assert gol <= r["discrepancy"]


def test_gol_monotone_in_k(data):
    rec = run_experiment(config(data, k_grid=(5, 10, 20, 40, 60)))
    for fold in (0, 1):
        d = [r["discrepancy"] for r in rec.rows if r["mode"] == "GOL" and r["fold"] == fold]
        assert len(d) == 5 and all(x >= y for x, y in zip(d, d[1:]))


def test_batching_cannot_beat_global(data):
    one = run_experiment(config(data, modes=("GOL",)))
    four = run_experiment(config(data, modes=("GOL",), user_batches=4))
    for a, b in zip(one.rows, four.rows):
        assert b["discrepancy"] >= a["discrepancy"]
    assert any(b["discrepancy"] > a["discrepancy"] for a, b in zip(one.rows, four.rows))


def test_solve_batched_merges_feasible_subgraphs():
    rng = np.random.default_rng(5)
    for _ in range(50):
        g = random_graph(rng, max_users=6, max_items=5)
        t = uniform_target(g)
        whole = solve_batched(g, t, 1, lambda sg, st: two_pass(sg, st).subgraph)
        split = solve_batched(g, t, 3, lambda sg, st: two_pass(sg, st).subgraph)
        assert split.is_feasible()
        d = lambda h: int(np.abs(indegree_vector(h) - t.a).sum())  # noqa: E731
        assert d(split) >= d(whole)


def test_batch_slices_cover_users():
    assert batch_slices(10, 4) == [(0, 2), (2, 5), (5, 7), (7, 10)]
    assert batch_slices(2, 4) == [(0, 1), (1, 2)]


def test_popularity_bins_and_minimums():
    labels = popularity_bins([5, 9, 1, 7, 3, 0], 3)
    assert labels.tolist() == [1, 0, 2, 0, 1, 2]
    spec = category_spec(labels, np.array([1, 2, 3, 4, 5, 6]), 0.5)
    assert spec.minimums.tolist() == [3, 3, 4]


def test_empty_modes_header_only(data, tmp_path):
    rec = run_experiment(config(data, modes=()))
    emit_outputs(rec, tmp_path)
    assert (tmp_path / "metrics.csv").read_text() == ",".join(COLUMNS) + "\n"


def test_row_count(data, tmp_path):
    rec = run_experiment(config(data, k_grid=(20,)))
    emit_outputs(rec, tmp_path)
    assert len((tmp_path / "metrics.csv").read_text().splitlines()) == 1 + 4


def test_summary_round_trip_and_rerun(data, tmp_path):
    cfg = config(data, modes=("TOP", "GOL", "GRD", "AB"), dimacs=True)
    rec = run_experiment(cfg, tmp_path / "a")
    emit_outputs(rec, tmp_path / "a")
    text = (tmp_path / "a" / "metrics.csv").read_text()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert metrics_csv(rows_from_summary(summary)) == text
    assert summary["fingerprint"] == cfg.fingerprint() and summary["status"] == "complete"
    assert summary["significance"]
    assert any(p.suffix == ".min" for p in (tmp_path / "a" / "dimacs").iterdir())
    rec2 = run_experiment(cfg, workers=2)
    emit_outputs(rec2, tmp_path / "b")
    assert (tmp_path / "b" / "metrics.csv").read_bytes() == text.encode()
    tradeoff = (tmp_path / "a" / "tradeoff.csv").read_text().splitlines()
    assert tradeoff[0] == "target,mode,k,discrepancy,precision,folds" and len(tradeoff) == 1 + 4 * 3


def test_infeasible_stage_error(data, tmp_path):
    with pytest.raises(StageError) as info:
        run_experiment(config(data, k_grid=(60,), c=60), tmp_path)
    assert info.value.stage == "candidates" and isinstance(info.value.cause, InfeasibleError)
    assert "k 60" in str(info.value)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "aborted" and summary["rows"] == []


def test_partial_rows_flushed(data, tmp_path, monkeypatch):
    calls = []

    def flaky(g, t, **kw):
        calls.append(g.n_edges)
        if len(calls) == 3:
            raise InfeasibleError("boom")
        return two_pass(g, t, **kw)

    monkeypatch.setattr(harness, "two_pass", flaky)
    with pytest.raises(StageError) as info:
        run_experiment(config(data, run_folds=1), tmp_path)
    assert info.value.stage == "diversify" and "mode GOL" in str(info.value)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "aborted"
    # TOP and GOL rows for the first two k values made it out
    assert len(summary["rows"]) == 5
    assert len((tmp_path / "metrics.csv").read_text().splitlines()) == 6


def test_clamp_display_recovers(data):
    rec = run_experiment(config(data, k_grid=(10, 200), c=10, clamp_display=True))
    assert len(rec.rows) == 2 * 2 * 2


def test_optimality_assert_fires(data, monkeypatch):
    from divflow.rerankers import rerank_top

    class Fake:
        def __init__(self, g):
            self.subgraph = rerank_top(g)

    monkeypatch.setattr(harness, "two_pass", lambda g, t, **kw: Fake(g))
    with pytest.raises(StageError) as info:
        run_experiment(config(data, modes=("GOL", "CDG-bin")))
    assert info.value.stage == "check"


def test_missing_dataset_is_stage_error(tmp_path):
    with pytest.raises(StageError) as info:
        run_experiment(ExperimentConfig(dataset=str(tmp_path / "nope.dat")))
    assert info.value.stage == "ingest"


def test_imported_scores(data, tmp_path):
    scores = tmp_path / "scores.tsv"
    rng = np.random.default_rng(0)
    scores.write_text("".join(f"{u}\t{i}\t{rng.random()!r}\n" for u in range(1, 41) for i in range(1, 81)))
    rec = run_experiment(config(data, recommender="imported", scores=str(scores), k_grid=(20,)))
    assert len(rec.rows) == 4


def test_unwritable_outdir(data, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rec = run_experiment(config(data, modes=("TOP",), k_grid=(10,)))
    with pytest.raises(StageError):
        emit_outputs(rec, blocker / "out")
