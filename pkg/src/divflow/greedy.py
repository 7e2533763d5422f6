"""Randomized greedy discrepancy reduction.

Users pick one edge per round, in ascending id order, for ``max(c)``
rounds. An edge into an item still below its target is preferred; within
the preferred pool (or, failing that, among all unused candidates) an edge
is drawn with probability proportional to ``weight ** q``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InfeasibleError
from .graph import SolutionSubgraph, indegree_vector, validate_feasible

WEIGHT_FLOOR = 1e-9
DEFAULT_GRID = (1.5, 2.0, 4.0, 8.0, 16.0, 32.0)


@dataclass(frozen=True)
class GreedyConfig:
    q_grid: tuple = DEFAULT_GRID
    seed: int = 0
    slack: float = 0.10

    def __post_init__(self):
        grid = tuple(float(q) for q in self.q_grid)
        if not grid:
            raise ValueError("q grid is empty")
        if any(q <= 1 for q in grid):
            raise ValueError("every q must exceed 1")
        if self.slack < 0:
            raise ValueError("slack must be non-negative")
        object.__setattr__(self, "q_grid", grid)


@dataclass(frozen=True, eq=False)
class GreedyRun:
    q: float
    subgraph: SolutionSubgraph
    discrepancy: int
    relevance_fp: int


def greedy_once(g, t, q, seed=0, trace=None):
    """One randomized greedy solution.

    ``trace``, if a list, receives one ``(edge, preferred_pool_nonempty,
    below_target)`` tuple per pick, where ``below_target`` tells whether
    the picked item was under its target before the pick.
    """
    if q <= 1:
        raise ValueError("q must exceed 1")
    bad = validate_feasible(g)
    if bad:
        raise InfeasibleError(f"{len(bad)} users have fewer candidates than display slots", bad)
    a = np.asarray(getattr(t, "a", t), dtype=np.int64)
    if a.shape[0] != g.n_items:
        raise ValueError("target length differs from item count")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    # log-space weights: 1e-9 ** 32 underflows a double
    logw = q * np.log(np.maximum(g.weights, WEIGHT_FLOOR))
    ptr = g.user_ptr
    items = g.items
    used = np.zeros(g.n_edges, dtype=bool)
    deg = np.zeros(g.n_items, dtype=np.int64)
    picks = []
    display = g.display
    for rnd in range(int(display.max(initial=0))):
        for u in np.flatnonzero(display > rnd).tolist():
            lo, hi = ptr[u], ptr[u + 1]
            free = ~used[lo:hi]
            under = free & (deg[items[lo:hi]] < a[items[lo:hi]])
            pool = under if under.any() else free
            idx = np.flatnonzero(pool)
            if idx.size == 0:
                raise InfeasibleError(f"user {u} ran out of candidates", [u])
            w = np.exp(logw[lo + idx] - logw[lo + idx].max())
            cum = np.cumsum(w)
            k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            e = lo + int(idx[min(k, idx.size - 1)])
            if trace is not None:
                trace.append((e, bool(under.any()), bool(deg[items[e]] < a[items[e]])))
            used[e] = True
            deg[items[e]] += 1
            picks.append(e)
    return SolutionSubgraph(g, np.array(picks, dtype=np.int64))


def _run(g, t, q, seq):
    h = greedy_once(g, t, q, np.random.default_rng(seq))
    a = np.asarray(getattr(t, "a", t), dtype=np.int64)
    disc = int(np.abs(indegree_vector(h) - a).sum())
    return GreedyRun(q, h, disc, h.total_relevance_fp())


def greedy_runs(g, t, cfg=GreedyConfig(), workers=1):
    """One run per grid entry; run ``i`` is seeded by ``SeedSequence([*seed, i])``.

    ``cfg.seed`` may be an int or a tuple of ints.
    """
    base = list(cfg.seed) if isinstance(cfg.seed, tuple) else [cfg.seed]
    seqs = [np.random.SeedSequence([*base, i]) for i in range(len(cfg.q_grid))]
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda p: _run(g, t, *p), zip(cfg.q_grid, seqs)))
    return [_run(g, t, q, s) for q, s in zip(cfg.q_grid, seqs)]


def select_run(runs, slack=0.10):
    """Highest relevance among runs within ``(1 + slack)`` of the best discrepancy.

    Ties go to lower discrepancy, then to lower ``q``.
    """
    if not runs:
        raise ValueError("no runs to select from")
    best = min(r.discrepancy for r in runs)
    bound = (1 + Fraction(str(slack))) * best
    ok = [r for r in runs if r.discrepancy <= bound]
    return min(ok, key=lambda r: (-r.relevance_fp, r.discrepancy, r.q))


def greedy_sweep(g, t, cfg=GreedyConfig(), workers=1):
    return select_run(greedy_runs(g, t, cfg, workers), cfg.slack).subgraph
