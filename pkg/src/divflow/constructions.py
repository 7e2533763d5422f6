"""Flow networks for discrepancy minimization and its relevance-aware variants.

Node layout shared by all constructions: users ``0..l-1``, items
``l..l+r-1``, then the two sinks ``t1 = l+r`` (free absorption up to each
target) and ``t2 = l+r+1`` (overflow). Extra nodes are appended per mode.
Candidate edges always occupy the first arcs, in graph edge order, except in
the full-DCG network where they are routed through per-edge gadget nodes.

Every solver-backed mode recomputes its objective from the extracted
subgraph and checks it against the optimal flow cost.
"""

from dataclasses import dataclass, field
import math
import time
import warnings

import numpy as np

from .errors import InfeasibleError
from .graph import SCALE, SolutionSubgraph, indegree_vector, validate_feasible
from .mcf import FlowNetwork, fix_arc_flow, solve_min_cost_flow

OVERFLOW_COST = 2


@dataclass(frozen=True, eq=False)
class DiscrepancyResult:
    mode: str
    subgraph: SolutionSubgraph
    discrepancy: int
    relevance_fp: int
    flow_cost: int
    objective: int
    gain_fp: int = 0
    extras: dict = field(default_factory=dict)
    wall_ms: float = 0.0

    @property
    def relevance(self):
        return self.relevance_fp / SCALE

    def summary(self):
        return {
            "mode": self.mode,
            "discrepancy": self.discrepancy,
            "relevance": self.relevance,
            "flow_cost": self.flow_cost,
            "objective": self.objective,
            "wall_ms": self.wall_ms,
            **self.extras,
        }


@dataclass(frozen=True)
class CategorySpec:
    """Item categories (``labels[j]`` in ``0..k-1``) with minimum counts."""

    labels: np.ndarray
    minimums: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        mins = np.asarray(self.minimums, dtype=np.int64).reshape(-1)
        if labels.size and (labels.min() < 0 or labels.max() >= mins.size):
            raise ValueError("category labels must index the minimums vector")
        if (mins < 0).any():
            raise ValueError("category minimums must be non-negative")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "minimums", mins)

    @property
    def n_categories(self):
        return int(self.minimums.size)

    def counts(self, indegree):
        return np.bincount(self.labels, weights=indegree, minlength=self.n_categories).astype(np.int64)


class _Arcs:
    def __init__(self):
        self._blocks = []
        self.count = 0

    def add(self, tail, head, capacity, cost=0, lower=0):
        tail = np.atleast_1d(np.asarray(tail, dtype=np.int64))
        n = tail.shape[0]
        cols = [tail] + [np.broadcast_to(np.asarray(x, dtype=np.int64), (n,)) for x in (head, lower, capacity, cost)]
        self._blocks.append(np.column_stack(cols) if n else np.empty((0, 5), dtype=np.int64))
        sl = slice(self.count, self.count + n)
        self.count += n
        return sl

    def network(self, supply):
        arcs = np.concatenate(self._blocks) if self._blocks else np.empty((0, 5), dtype=np.int64)
        return FlowNetwork(supply, arcs[:, 0], arcs[:, 1], arcs[:, 2], arcs[:, 3], arcs[:, 4])


@dataclass
class _Built:
    net: FlowNetwork
    edge_arcs: slice
    fixed_arc: int


def _as_array(t, r):
    a = np.asarray(getattr(t, "a", t), dtype=np.int64).reshape(-1)
    if a.shape[0] != r:
        raise ValueError(f"target covers {a.shape[0]} items, graph has {r}")
    if (a < 0).any():
        raise ValueError("targets must be non-negative")
    return a


def _check(g, t, balanced=True):
    bad = validate_feasible(g)
    if bad:
        raise InfeasibleError(
            f"{len(bad)} users have fewer candidates than their display constraint: {bad[:20]}", bad)
    a = _as_array(t, g.n_items)
    if balanced and int(a.sum()) != g.total_display:
        raise ValueError(f"targets sum to {int(a.sum())} but display constraints sum to {g.total_display}")
    return a


def _discrepancy_arcs(g, a, overflow_cost, edge_cost=0, edge_tail=None):
    l, r = g.n_users, g.n_items
    t1, t2 = l + r, l + r + 1
    big = max(g.total_display, 1)
    arcs = _Arcs()
    items = l + np.arange(r)
    edges = arcs.add(g.users if edge_tail is None else edge_tail, l + g.items, 1, edge_cost)
    arcs.add(items, t1, a, 0)
    arcs.add(items, t2, big, overflow_cost)
    fixed = arcs.add(t1, t2, big, 0).start
    return arcs, edges, fixed


def _supply(g, n_nodes):
    supply = np.zeros(n_nodes, dtype=np.int64)
    supply[: g.n_users] = g.display
    supply[g.n_users + g.n_items + 1] = -g.total_display
    return supply


def build_discrepancy_network(g, t):
    """The base network: optimal flow cost equals the minimum discrepancy."""
    a = _check(g, t)
    arcs, _, _ = _discrepancy_arcs(g, a, OVERFLOW_COST)
    return arcs.network(_supply(g, g.n_users + g.n_items + 2))


def _solve(net, method, backend):
    sol = solve_min_cost_flow(net, method=method, backend=backend)
    if not sol.optimal:
        raise InfeasibleError("flow network has no feasible flow")
    return sol


def _l1(g, chosen, a):
    indeg = np.bincount(g.items[chosen], minlength=g.n_items)
    return int(np.abs(indeg - a).sum()), indeg


def _finish(mode, g, chosen, a, flow_cost, objective, t0, rank=None, gain_fp=0, extras=None):
    h = SolutionSubgraph(g, chosen, rank)
    if not h.is_feasible():
        raise RuntimeError(f"{mode}: extracted subgraph violates display constraints")
    disc = int(np.abs(indegree_vector(h) - a).sum())
    if objective != flow_cost:
        raise RuntimeError(f"{mode}: objective {objective} differs from flow cost {flow_cost}")
    return DiscrepancyResult(mode, h, disc, h.total_relevance_fp(), int(flow_cost), int(objective),
                             int(gain_fp), extras or {}, (time.perf_counter() - t0) * 1e3)


def min_discrepancy(g, t, method="auto", backend=None):
    """Feasible subgraph of minimum L1 distance between indegrees and ``t``."""
    t0 = time.perf_counter()
    a = _check(g, t)
    arcs, edges, _ = _discrepancy_arcs(g, a, OVERFLOW_COST)
    sol = _solve(arcs.network(_supply(g, g.n_users + g.n_items + 2)), method, backend)
    chosen = np.flatnonzero(sol.flow[edges])
    disc, _ = _l1(g, chosen, a)
    return _finish("discrepancy", g, chosen, a, sol.cost, disc, t0)


def _second_pass_arcs(g, a, overflow_units, edge_cost, edge_tail=None):
    arcs, edges, fixed = _discrepancy_arcs(g, a, 0, edge_cost, edge_tail)
    return arcs, edges, fixed, g.total_display - overflow_units


def two_pass(g, t, method="auto", backend=None):
    """Among minimum-discrepancy subgraphs, the one of maximum total weight.

    Pass one finds the optimal discrepancy; pass two pins the ``t1 -> t2``
    arc to the free-absorption volume of that optimum, drops structural
    costs, and charges each candidate edge its negated fixed-point weight.
    """
    t0 = time.perf_counter()
    a = _check(g, t)
    first = min_discrepancy(g, a, method, backend)
    overflow = first.flow_cost // OVERFLOW_COST
    arcs, edges, fixed, pinned = _second_pass_arcs(g, a, overflow, -g.weights_fp)
    net = fix_arc_flow(arcs.network(_supply(g, g.n_users + g.n_items + 2)), fixed, pinned)
    sol = _solve(net, method, backend)
    chosen = np.flatnonzero(sol.flow[edges])
    disc, _ = _l1(g, chosen, a)
    if disc != first.discrepancy:
        raise RuntimeError(f"second pass changed discrepancy {first.discrepancy} -> {disc}")
    objective = -int(g.weights_fp[chosen].sum())
    return _finish("two-pass", g, chosen, a, sol.cost, objective, t0,
                   extras={"first_pass_cost": first.flow_cost})


def max_aggdiv(g, maximize_relevance=True, method="auto", backend=None):
    """Maximize the number of items recommended at least once.

    Solves the discrepancy network with every target equal to one (the sink
    demand stays at the display total). With ``maximize_relevance`` a second
    pass picks the highest-weight subgraph among the maximum-coverage ones.
    """
    t0 = time.perf_counter()
    _check(g, np.zeros(g.n_items, dtype=np.int64), balanced=False)
    r = g.n_items
    if g.total_display < r:
        warnings.warn(f"display total {g.total_display} < {r} items; full coverage is impossible")
    a = np.ones(r, dtype=np.int64)
    supply = _supply(g, g.n_users + r + 2)
    arcs, edges, _ = _discrepancy_arcs(g, a, OVERFLOW_COST)
    sol = _solve(arcs.network(supply), method, backend)
    chosen = np.flatnonzero(sol.flow[edges])
    covered = int(np.count_nonzero(np.bincount(g.items[chosen], minlength=r)))
    if sol.cost != OVERFLOW_COST * (g.total_display - covered):
        raise RuntimeError("coverage does not match flow cost")
    flow_cost = sol.cost
    if maximize_relevance:
        arcs, edges, fixed, pinned = _second_pass_arcs(g, a, g.total_display - covered, -g.weights_fp)
        sol = _solve(fix_arc_flow(arcs.network(supply), fixed, pinned), method, backend)
        chosen = np.flatnonzero(sol.flow[edges])
        again = int(np.count_nonzero(np.bincount(g.items[chosen], minlength=r)))
        if again != covered:
            raise RuntimeError("relevance pass lost coverage")
        flow_cost = sol.cost
        objective = -int(g.weights_fp[chosen].sum())
    else:
        objective = OVERFLOW_COST * (g.total_display - covered)
    res = _finish("aggdiv", g, chosen, a, flow_cost, objective, t0,
                  extras={"aggdiv": covered})
    return res


def weighted(g, t, mu, method="auto", backend=None):
    """Single solve of ``discrepancy - mu * total relevance``.

    Costs share the fixed-point scale: an overflow unit costs ``2 * SCALE``
    and an edge ``-round(mu * weight_fp)``.
    """
    if mu < 0:
        raise ValueError("mu must be non-negative")
    t0 = time.perf_counter()
    a = _check(g, t)
    edge_cost = -np.rint(mu * g.weights_fp).astype(np.int64)
    arcs, edges, _ = _discrepancy_arcs(g, a, OVERFLOW_COST * SCALE, edge_cost)
    sol = _solve(arcs.network(_supply(g, g.n_users + g.n_items + 2)), method, backend)
    chosen = np.flatnonzero(sol.flow[edges])
    disc, _ = _l1(g, chosen, a)
    objective = disc * SCALE + int(edge_cost[chosen].sum())
    return _finish("weighted", g, chosen, a, sol.cost, objective, t0, extras={"mu": float(mu)})


def slot_gain_fp(weight_fp, slot):
    """Fixed-point discounted gain of ``weight_fp`` shown in 1-based ``slot``."""
    return np.rint(np.asarray(weight_fp, dtype=np.float64) / math.log(slot + 1)).astype(np.int64)


def top_c_mask(g):
    """Edges ranked within the first ``display[u]`` of their user's list."""
    order = np.lexsort((g.items, -g.weights_fp, g.users))
    ptr = g.user_ptr
    pos = np.empty(g.n_edges, dtype=np.int64)
    pos[order] = np.arange(g.n_edges) - ptr[g.users[order]]
    return pos < g.display[g.users]


def binary_cdg(g, t, relevant=None, method="auto", backend=None):
    """Max binary discounted gain among minimum-discrepancy subgraphs.

    Relevant edges leave user ``u`` through an intermediary node fed by
    ``display[u]`` parallel unit arcs whose costs are the negated slot
    gains ``1/ln(i+1)``, so the ``k``-th relevant pick earns slot ``k``.
    ``relevant`` defaults to each user's top-``c`` candidates.
    """
    t0 = time.perf_counter()
    a = _check(g, t)
    relevant = top_c_mask(g) if relevant is None else np.asarray(relevant, dtype=bool)
    if relevant.shape != (g.n_edges,):
        raise ValueError("relevant mask must cover every edge")
    first = min_discrepancy(g, a, method, backend)
    l, r = g.n_users, g.n_items
    inter = l + r + 2 + np.arange(l)
    tails = np.where(relevant, inter[g.users], g.users)
    arcs, edges, fixed, pinned = _second_pass_arcs(g, a, first.flow_cost // OVERFLOW_COST, 0, tails)
    c = g.display
    slot_users = np.repeat(np.arange(l), c)
    slots = np.arange(slot_users.size) - np.repeat(np.cumsum(c) - c, c) + 1
    gains = np.array([slot_gain_fp(SCALE, s) for s in range(1, int(c.max(initial=0)) + 1)], dtype=np.int64)
    slot_arcs = arcs.add(slot_users, inter[slot_users], 1, -gains[slots - 1] if slots.size else 0)
    supply = np.zeros(l + r + 2 + l, dtype=np.int64)
    supply[: l + r + 2] = _supply(g, l + r + 2)
    sol = _solve(fix_arc_flow(arcs.network(supply), fixed, pinned), method, backend)
    chosen = np.flatnonzero(sol.flow[edges])
    disc, _ = _l1(g, chosen, a)
    if disc != first.discrepancy:
        raise RuntimeError("second pass changed discrepancy")
    hits = np.bincount(g.users[chosen][relevant[chosen]], minlength=l)
    gain = int(sum(int(gains[:k].sum()) for k in hits.tolist()))
    rank_order = np.lexsort((g.items[chosen], -g.weights_fp[chosen], ~relevant[chosen], g.users[chosen]))
    rank = np.empty(chosen.size, dtype=np.int64)
    users_sorted = g.users[chosen][rank_order]
    starts = np.searchsorted(users_sorted, users_sorted, side="left")
    rank[rank_order] = np.arange(chosen.size) - starts + 1
    del slot_arcs
    return _finish("binary-cdg", g, chosen, a, sol.cost, -gain, t0, rank=rank, gain_fp=gain,
                   extras={"relevant_hits": int(hits.sum())})


def full_cdg(g, t, method="auto", backend=None):
    """Max discounted gain (weights as relevance) among min-discrepancy subgraphs.

    Each user gets ``c`` unit-capacity slot nodes. A candidate edge becomes
    a gadget node fed by one arc per slot (cost ``-weight/ln(i+1)``) and
    draining into its item with capacity one, so an edge is used at most
    once and its slot is the user's display rank.
    """
    t0 = time.perf_counter()
    a = _check(g, t)
    c_values = np.unique(g.display)
    if c_values.size > 1:
        raise ValueError("full discounted-gain network needs a uniform display constraint")
    c = int(c_values[0]) if c_values.size else 0
    first = min_discrepancy(g, a, method, backend)
    l, r, m = g.n_users, g.n_items, g.n_edges
    slot0 = l + r + 2
    gadget0 = slot0 + l * c
    arcs, edges, fixed, pinned = _second_pass_arcs(g, a, first.flow_cost // OVERFLOW_COST, 0,
                                                    gadget0 + np.arange(m))
    slot_nodes = slot0 + np.arange(l * c)
    arcs.add(np.repeat(np.arange(l), c), slot_nodes, 1, 0)
    slot_blocks = []
    for i in range(1, c + 1):
        sl = arcs.add(slot0 + g.users * c + (i - 1), gadget0 + np.arange(m), 1,
                      -slot_gain_fp(g.weights_fp, i))
        slot_blocks.append(sl)
    supply = np.zeros(gadget0 + m, dtype=np.int64)
    supply[: l + r + 2] = _supply(g, l + r + 2)
    sol = _solve(fix_arc_flow(arcs.network(supply), fixed, pinned), method, backend)
    chosen = np.flatnonzero(sol.flow[edges])
    disc, _ = _l1(g, chosen, a)
    if disc != first.discrepancy:
        raise RuntimeError("second pass changed discrepancy")
    slot_of = np.zeros(m, dtype=np.int64)
    gain = 0
    for i, sl in enumerate(slot_blocks, start=1):
        used = np.flatnonzero(sol.flow[sl])
        slot_of[used] = i
        gain += int(slot_gain_fp(g.weights_fp[used], i).sum())
    rank = slot_of[chosen]
    if chosen.size and (rank == 0).any():
        raise RuntimeError("chosen edge without a slot")
    return _finish("full-cdg", g, chosen, a, sol.cost, -gain, t0, rank=rank, gain_fp=gain)


def _category_network(g, a, cats):
    if cats.labels.shape[0] != g.n_items:
        raise ValueError("category labels must cover every item exactly once")
    k = cats.n_categories
    mins = cats.minimums
    per_cat_target = np.bincount(cats.labels, weights=a, minlength=k).astype(np.int64)
    over = np.flatnonzero(mins > per_cat_target)
    if over.size:
        raise ValueError(f"category minimums exceed summed item targets for categories {over.tolist()}")
    total = g.total_display
    if int(mins.sum()) > total:
        raise ValueError("category minimums exceed the display total")
    l, r = g.n_users, g.n_items
    big = max(total, 1)
    base = l + r
    T1 = base + 3 * np.arange(k)
    T2 = T1 + 1
    T3 = T1 + 2
    s1 = base + 3 * k
    s2 = s1 + 1
    arcs = _Arcs()
    items = l + np.arange(r)
    edges = arcs.add(g.users, l + g.items, 1, 0)
    arcs.add(items, T1[cats.labels], a, 0)
    arcs.add(items, T2[cats.labels], big, OVERFLOW_COST)
    arcs.add(T1, T2, big, 0)
    arcs.add(T2, T3, mins, 0)
    arcs.add(T2, s1, big, 1)
    arcs.add(np.full(k, s1), T3, big, 0)
    arcs.add(T3, s2, big, 0)
    arcs.add(T2, s2, big, 0)
    supply = np.zeros(s2 + 1, dtype=np.int64)
    supply[:l] = g.display
    supply[T3] = -mins
    supply[s2] = -(total - int(mins.sum()))
    return arcs.network(supply), edges


def category_network(g, t, cats, method="auto", backend=None):
    """Discrepancy plus the total shortfall of per-category minimum counts.

    Per category ``i`` the items drain into ``T1_i``/``T2_i`` like in the
    base network. ``T2_i -> T3_i`` passes up to ``A_i`` units for free,
    ``T3_i`` demands ``A_i``, and any shortfall has to be covered through
    the distributor, which charges one unit per unit of flow entering it.
    Surplus leaves ``T2_i`` straight to the supersink at no cost.
    """
    t0 = time.perf_counter()
    a = _check(g, t)
    net, edges = _category_network(g, a, cats)
    sol = _solve(net, method, backend)
    chosen = np.flatnonzero(sol.flow[edges])
    disc, indeg = _l1(g, chosen, a)
    mins = cats.minimums
    shortfall = int(np.maximum(mins - cats.counts(indeg), 0).sum())
    return _finish("category", g, chosen, a, sol.cost, disc + shortfall, t0,
                   extras={"category_shortfall": shortfall})


def _two_slope_network(g, a, threshold, s1, s2):
    l, r = g.n_users, g.n_items
    t1, t2 = l + r, l + r + 1
    big = max(g.total_display, 1)
    arcs = _Arcs()
    items = l + np.arange(r)
    edges = arcs.add(g.users, l + g.items, 1, 0)
    arcs.add(items, t1, a, 0)
    arcs.add(items, t2, threshold, OVERFLOW_COST * s1)
    arcs.add(items, t2, big, OVERFLOW_COST * s2)
    arcs.add(t1, t2, big, 0)
    return arcs.network(_supply(g, l + r + 2)), edges


def two_slope_network(g, t, threshold=20, slopes=(1, 2), method="auto", backend=None):
    """Piecewise-linear convex overflow penalty.

    Past its target an item pays ``2*s1`` per unit for the next
    ``threshold`` units and ``2*s2`` per unit beyond.
    """
    s1, s2 = (int(s) for s in slopes)
    if threshold < 1:
        raise ValueError("threshold must be at least 1")
    if not s2 >= s1 >= 1:
        raise ValueError("slopes must satisfy s2 >= s1 >= 1")
    t0 = time.perf_counter()
    a = _check(g, t)
    net, edges = _two_slope_network(g, a, threshold, s1, s2)
    sol = _solve(net, method, backend)
    chosen = np.flatnonzero(sol.flow[edges])
    disc, indeg = _l1(g, chosen, a)
    excess = np.maximum(indeg - a, 0)
    objective = int((OVERFLOW_COST * s1 * np.minimum(excess, threshold)
                     + OVERFLOW_COST * s2 * np.maximum(excess - threshold, 0)).sum())
    return _finish("two-slope", g, chosen, a, sol.cost, objective, t0,
                   extras={"threshold": int(threshold), "slopes": [s1, s2]})


MODES = ("discrepancy", "aggdiv", "two-pass", "weighted", "binary-cdg", "full-cdg", "category", "two-slope")


@dataclass(frozen=True, eq=False)
class ConstructionSpec:
    """A mode name plus its graph, target and mode parameters."""

    mode: str
    graph: object
    target: object = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.mode == "two-slope" and self.params.get("threshold", 20) < 1:
            raise ValueError("threshold must be at least 1")

    def run(self, method="auto", backend=None):
        g, t, p = self.graph, self.target, dict(self.params)
        kw = {"method": method, "backend": backend}
        if self.mode == "discrepancy":
            return min_discrepancy(g, t, **kw)
        if self.mode == "aggdiv":
            return max_aggdiv(g, p.get("maximize_relevance", True), **kw)
        if self.mode == "two-pass":
            return two_pass(g, t, **kw)
        if self.mode == "weighted":
            return weighted(g, t, p["mu"], **kw)
        if self.mode == "binary-cdg":
            return binary_cdg(g, t, p.get("relevant"), **kw)
        if self.mode == "full-cdg":
            return full_cdg(g, t, **kw)
        if self.mode == "category":
            return category_network(g, t, p["categories"], **kw)
        return two_slope_network(g, t, p.get("threshold", 20), p.get("slopes", (1, 2)), **kw)


def construction_network(mode, g, t=None, **params):
    """The single-solve network of ``mode``, for DIMACS export.

    Two-pass style modes export their first (discrepancy) network.
    """
    if mode in ("discrepancy", "two-pass", "binary-cdg", "full-cdg"):
        return build_discrepancy_network(g, t)
    if mode == "aggdiv":
        arcs, _, _ = _discrepancy_arcs(g, np.ones(g.n_items, dtype=np.int64), OVERFLOW_COST)
        return arcs.network(_supply(g, g.n_users + g.n_items + 2))
    a = _check(g, t)
    if mode == "weighted":
        edge_cost = -np.rint(params["mu"] * g.weights_fp).astype(np.int64)
        arcs, _, _ = _discrepancy_arcs(g, a, OVERFLOW_COST * SCALE, edge_cost)
        return arcs.network(_supply(g, g.n_users + g.n_items + 2))
    if mode == "category":
        return _category_network(g, a, params["categories"])[0]
    if mode == "two-slope":
        s1, s2 = (int(s) for s in params.get("slopes", (1, 2)))
        return _two_slope_network(g, a, int(params.get("threshold", 20)), s1, s2)[0]
    raise ValueError(f"no DIMACS export for mode {mode!r}")
