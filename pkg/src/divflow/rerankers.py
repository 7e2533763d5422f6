"""Reranking baselines over candidate lists.

Each reranker rescores the candidate edges of a :class:`CandidateGraph`
(whose weights are the normalized relevance) and keeps every user's
``display[u]`` best edges, ties going to the lower item id.
"""

from dataclasses import dataclass

import numpy as np

from .graph import SolutionSubgraph


@dataclass(frozen=True, eq=False)
class SeenModel:
    """Fraction of users who rated each item in training."""

    p_seen: np.ndarray
    n_users: int

    def __post_init__(self):
        p = np.asarray(self.p_seen, dtype=np.float64)
        if (p < 0).any() or (p > 1).any():
            raise ValueError("seen probabilities must lie in [0, 1]")
        if self.n_users < 1:
            raise ValueError("need at least one user")
        object.__setattr__(self, "p_seen", p)

    @classmethod
    def from_ratings(cls, train):
        raters = np.bincount(train.items, minlength=train.n_items)
        return cls(raters / train.n_users, train.n_users)

    def novelty_pc(self):
        return 1.0 - self.p_seen

    def novelty_fd(self):
        """``-log2 p(seen)`` (unseen items floored at ``1/(2|U|)``), min-max scaled to [0, 1]."""
        raw = -np.log2(np.maximum(self.p_seen, 1.0 / (2 * self.n_users)))
        if raw.size == 0 or raw.max() <= raw.min():
            return np.zeros_like(raw)
        return (raw - raw.min()) / (raw.max() - raw.min())


def top_by_score(g, score):
    """Keep each user's ``display[u]`` highest-``score`` edges."""
    score = np.asarray(score, dtype=np.float64)
    if score.shape != (g.n_edges,):
        raise ValueError("need one score per candidate edge")
    order = np.lexsort((g.items, -score, g.users))
    pos = np.arange(g.n_edges) - g.user_ptr[g.users[order]]
    keep = pos < g.display[g.users[order]]
    return SolutionSubgraph(g, order[keep], pos[keep] + 1)


def rerank_top(g):
    return top_by_score(g, g.weights)


def rerank_pc(g, seen):
    return top_by_score(g, (g.weights + seen.novelty_pc()[g.items]) / 2)


def rerank_fd(g, seen):
    return top_by_score(g, (g.weights + seen.novelty_fd()[g.items]) / 2)


def rerank_bayes(g, alpha=0.5, rel=None):
    """Damp each edge by its item's total relevance raised to ``-alpha``.

    Item totals come from the full relevance function ``rel`` when given,
    otherwise from the candidate graph. Edges of items whose total is zero
    are never picked unless a user has nothing else.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    sums = rel.item_sums() if rel is not None else np.bincount(g.items, g.weights, g.n_items)
    s = sums[g.items]
    with np.errstate(divide="ignore"):
        damp = np.where(s > 0, np.power(np.where(s > 0, s, 1.0), -alpha), 0.0)
    score = np.where(s > 0, g.weights * damp, -1.0)
    return top_by_score(g, score)
