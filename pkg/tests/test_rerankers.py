import math

import numpy as np
import pytest

from divflow.graph import CandidateGraph
from divflow.ratings import RatingDataset
from divflow.recommenders import RelevanceFunction
from divflow.rerankers import SeenModel, rerank_bayes, rerank_fd, rerank_pc, rerank_top, top_by_score

from oracles import random_graph


def sort_oracle(g, score):
    """Per-user full sort by (-score, item)."""
    out = set()
    for u in range(g.n_users):
        mine = sorted(np.flatnonzero(g.users == u).tolist(), key=lambda e: (-score[e], g.items[e]))
        out |= {(u, int(g.items[e])) for e in mine[: g.display[u]]}
    return out


def test_top_examples():
    g = CandidateGraph(2, 5, [0, 0, 0, 1, 1, 1], [0, 3, 4, 1, 2, 4], [0.4, 0.9, 0.9, 0.2, 0.8, 0.1], 1)
    assert rerank_top(g).pairs() == {(0, 3), (1, 2)}
    rng = np.random.default_rng(0)
    for _ in range(50):
        g = random_graph(rng, max_c=3)
        h = rerank_top(g)
        assert h.pairs() == sort_oracle(g, g.weights)
        assert h.is_feasible()
        assert all(sorted(r) == list(range(1, len(r) + 1))
                   for r in [h.rank[h.users == u].tolist() for u in range(g.n_users)])


def test_seen_model():
    train = RatingDataset([0, 1, 0], [0, 0, 1], [4, 4, 4], ["a", "b"], ["x", "y", "z"])
    seen = SeenModel.from_ratings(train)
    assert seen.p_seen.tolist() == [1.0, 0.5, 0.0]
    assert seen.novelty_pc().tolist() == [0.0, 0.5, 1.0]
    raw = [0.0, 1.0, -math.log2(1 / 4)]
    assert seen.novelty_fd() == pytest.approx([r / raw[2] for r in raw])
    flat = SeenModel(np.full(3, 0.3), 10)
    assert flat.novelty_fd().tolist() == [0.0, 0.0, 0.0]


def test_pc_hand_averages():
    g = CandidateGraph(1, 3, [0, 0, 0], [0, 1, 2], [0.9, 0.6, 0.2], 2)
    seen = SeenModel([1.0, 0.5, 0.0], 2)
    # scores: (0.9 + 0)/2 = .45, (0.6 + .5)/2 = .55, (0.2 + 1)/2 = .6
    h = rerank_pc(g, seen)
    assert h.pairs() == {(0, 1), (0, 2)}
    assert h.ranked_lists() == [[2, 1]]


def test_fd_hand_averages():
    g = CandidateGraph(1, 3, [0, 0, 0], [0, 1, 2], [0.9, 0.6, 0.2], 1)
    seen = SeenModel([1.0, 0.5, 0.0], 2)
    nov = np.array([0.0, 1.0, 2.0]) / 2.0
    expected = sort_oracle(g, (g.weights + nov) / 2)
    # scores .45, .55, .6
    assert rerank_fd(g, seen).pairs() == expected == {(0, 2)}


def test_constant_novelty_matches_top():
    rng = np.random.default_rng(1)
    for _ in range(30):
        g = random_graph(rng, max_c=3)
        flat = SeenModel(np.full(g.n_items, 0.4), 5)
        top = rerank_top(g).pairs()
        assert rerank_pc(g, flat).pairs() == top
        assert rerank_fd(g, flat).pairs() == top
        assert rerank_bayes(g, 0.0).pairs() == top


def test_bayes_damping():
    # equal relevance for u0; item sums 10 vs 1 across users
    s = np.full((11, 2), np.nan)
    s[:, 0] = 1.0
    s[0, 1] = 1.0
    rel = RelevanceFunction(s)
    g = CandidateGraph(1, 2, [0, 0], [0, 1], [1.0, 1.0], 1)
    assert rerank_bayes(g, 1.0, rel).pairs() == {(0, 1)}
    assert rerank_bayes(g, 0.0, rel).pairs() == {(0, 0)}


def test_bayes_formula_oracle():
    rng = np.random.default_rng(2)
    s = rng.random((3, 4))
    s[0, 1] = np.nan
    rel = RelevanceFunction(s)
    users, items = np.nonzero(~np.isnan(s))
    g = CandidateGraph(3, 4, users, items, s[users, items], 2)
    sums = np.nansum(s, axis=0)
    score = g.weights * sums[g.items] ** -0.5
    assert rerank_bayes(g, 0.5, rel).pairs() == sort_oracle(g, score)


def test_bayes_zero_sum_items_last():
    g = CandidateGraph(1, 2, [0, 0], [0, 1], [0.0, 0.1], 1)
    assert rerank_bayes(g).pairs() == {(0, 1)}
    with pytest.raises(ValueError):
        rerank_bayes(g, -1)


def test_top_by_score_validates_length():
    g = CandidateGraph(1, 2, [0, 0], [0, 1], [0.5, 0.5], 1)
    with pytest.raises(ValueError):
        top_by_score(g, [1.0])
