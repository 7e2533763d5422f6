"""Sales-diversity and accuracy metrics for recommendation subgraphs.

All logarithms are natural.
"""

from dataclasses import asdict, dataclass
import math

import numpy as np
from scipy.stats import rankdata

from .graph import indegree_vector

EXACT_LIMIT = 25


def _degrees(d):
    d = np.asarray(d, dtype=np.float64).reshape(-1)
    total = d.sum()
    if d.size == 0 or total <= 0:
        raise ValueError("degree vector must have a positive sum")
    return d, total


def discrepancy_at(h, t):
    """L1 distance of indegrees from the targets over its maximum ``2 * sum(c)``."""
    a = np.asarray(getattr(t, "a", t), dtype=np.int64)
    total = int(h.graph.display.sum())
    if total == 0:
        raise ValueError("no recommendations are displayed")
    if int(a.sum()) != total:
        raise ValueError("targets and display constraints have different totals")
    return float(np.abs(indegree_vector(h) - a).sum()) / (2 * total)


def aggdiv_at(h):
    """Fraction of items recommended at least once."""
    if h.graph.n_items == 0:
        return 0.0
    return float(np.count_nonzero(indegree_vector(h))) / h.graph.n_items


def gini(d):
    d, total = _degrees(d)
    d = np.sort(d)
    r = d.size
    weights = np.arange(r, 0, -1)  # r + 1 - i for ascending i = 1..r
    return float((r + 1 - 2 * np.dot(weights, d) / total) / r)


def entropy(d):
    d, total = _degrees(d)
    p = d[d > 0] / total
    return float(-(p * np.log(p)).sum())


def precision_at(h, relevant):
    """Share of displayed recommendations found in the ``relevant`` (user, item) set."""
    total = int(h.graph.display.sum())
    if total == 0 or not relevant:
        return 0.0
    hits = sum(1 for pair in zip(h.users.tolist(), h.items.tolist()) if pair in relevant)
    return hits / total


def _gains(h, gains):
    if gains is None:
        return h.graph.weights[h.chosen]
    gains = np.asarray(gains, dtype=np.float64)
    if gains.shape == (h.graph.n_edges,):
        return gains[h.chosen]
    raise ValueError("gains must give one value per candidate edge")


def cg(h, gains=None):
    """Cumulative gain; ``gains`` is per candidate edge, edge weights by default."""
    return float(_gains(h, gains).sum())


def dcg(h, gains=None):
    """Discounted cumulative gain using each edge's display rank."""
    return float((_gains(h, gains) / np.log(h.rank + 1.0)).sum())


def _exact_tails(doubled, w2):
    """P(W+ >= w) and P(W+ <= w) for doubled integer ranks under random signs."""
    top = int(doubled.sum())
    counts = np.zeros(top + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled.tolist():
        counts[r:] = counts[r:] + counts[: top + 1 - r]
    total = 2 ** len(doubled)
    return int(counts[w2:].sum()) / total, int(counts[: w2 + 1].sum()) / total


def signed_rank(a, b, alternative="two-sided"):
    """Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped and tied absolute differences get average
    ranks. The null distribution is exact (by enumeration over sign
    patterns, done as a subset-sum count) for up to 25 nonzero pairs and a
    tie-corrected normal approximation above that.

    Returns ``(statistic, p_value)``. The statistic is ``W+`` (rank sum of
    positive ``a - b``) for one-sided alternatives and ``min(W+, W-)`` for
    the two-sided test.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("samples must be paired 1-d arrays")
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    diff = a - b
    diff = diff[diff != 0]
    n = diff.size
    if n == 0:
        return 0.0, 1.0
    ranks = rankdata(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    if n <= EXACT_LIMIT:
        doubled = np.rint(2 * ranks).astype(np.int64)
        ge, le = _exact_tails(doubled, int(round(2 * w_plus)))
    else:
        _, tie_counts = np.unique(ranks, return_counts=True)
        mean = n * (n + 1) / 4
        var = n * (n + 1) * (2 * n + 1) / 24 - float((tie_counts ** 3 - tie_counts).sum()) / 48
        z = (w_plus - mean) / math.sqrt(var)
        ge = 0.5 * math.erfc(z / math.sqrt(2))
        le = 0.5 * math.erfc(-z / math.sqrt(2))
    if alternative == "greater":
        return w_plus, min(1.0, ge)
    if alternative == "less":
        return w_plus, min(1.0, le)
    return min(w_plus, w_minus), min(1.0, 2 * min(ge, le))


@dataclass(frozen=True)
class MetricsReport:
    n: int
    discrepancy: float
    aggdiv: float
    gini: float
    entropy: float
    precision: float
    cg: float
    dcg: float

    def as_dict(self):
        return asdict(self)

    @classmethod
    def fields(cls):
        return list(cls.__dataclass_fields__)


def evaluate(h, t, relevant=None, gains=None):
    """All metrics of ``h`` against target ``t``; ``n`` is the largest display size."""
    deg = indegree_vector(h)
    has_recs = deg.sum() > 0
    return MetricsReport(
        n=int(h.graph.display.max(initial=0)),
        discrepancy=discrepancy_at(h, t),
        aggdiv=aggdiv_at(h),
        gini=gini(deg) if has_recs else 0.0,
        entropy=entropy(deg) if has_recs else 0.0,
        precision=precision_at(h, relevant or set()),
        cg=cg(h, gains),
        dcg=dcg(h, gains),
    )
