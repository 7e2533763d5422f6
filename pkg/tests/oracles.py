"""Independent brute-force oracles used by the test-suite.

Nothing here touches the flow solver: every optimum is found by exhaustive
enumeration of integral flows or of feasible recommendation subgraphs.
"""

import itertools
import math

import numpy as np

from divflow.graph import CandidateGraph


def brute_force_min_cost(net):
    """Exhaustive minimum over integral flows; None if infeasible."""
    ranges = [range(int(lo), int(cap) + 1) for lo, cap in zip(net.lower, net.capacity)]
    if not ranges:
        return 0 if not net.supply.any() else None
    flows = np.array(list(itertools.product(*ranges)), dtype=np.int64)
    incidence = np.zeros((net.n_arcs, net.n_nodes), dtype=np.int64)
    incidence[np.arange(net.n_arcs), net.tail] -= 1
    incidence[np.arange(net.n_arcs), net.head] += 1
    balance = flows @ incidence + net.supply
    ok = ~balance.any(axis=1)
    if not ok.any():
        return None
    return int((flows[ok] @ net.cost).min())


def random_graph(rng, max_users=6, max_items=5, max_c=2, max_deg=4, weights=True, min_users=1):
    """Random feasible candidate graph within the enumeration limits."""
    l = int(rng.integers(min_users, max_users + 1))
    r = int(rng.integers(2, max_items + 1))
    users, items, c = [], [], []
    for u in range(l):
        deg = int(rng.integers(1, min(max_deg, r) + 1))
        chosen = np.sort(rng.choice(r, size=deg, replace=False))
        users.extend([u] * deg)
        items.extend(chosen.tolist())
        c.append(int(rng.integers(1, min(max_c, deg) + 1)))
    w = rng.integers(0, 1001, size=len(users)) / 1000.0 if weights else np.ones(len(users))
    return CandidateGraph(l, r, users, items, w, c)


def random_target(rng, g):
    total = int(g.display.sum())
    cuts = np.sort(rng.integers(0, total + 1, size=g.n_items - 1))
    return np.diff(np.concatenate([[0], cuts, [total]])).astype(np.int64)


def feasible_subgraphs(g):
    """Yield every feasible edge selection as a sorted tuple of edge indices."""
    per_user = []
    for u in range(g.n_users):
        edges = np.flatnonzero(g.users == u).tolist()
        per_user.append(list(itertools.combinations(edges, int(g.display[u]))))
    for combo in itertools.product(*per_user):
        yield tuple(sorted(e for part in combo for e in part))


def indegrees(g, chosen):
    return np.bincount(g.items[list(chosen)], minlength=g.n_items)


def l1_discrepancy(g, chosen, target):
    return int(np.abs(indegrees(g, chosen) - np.asarray(target)).sum())


def slot_weight_fp(weight_fp, slot):
    """Discounted gain of a weight in 1-based ``slot``, natural log, rounded."""
    return int(round(weight_fp / math.log(slot + 1)))


def best_dcg_fp(g, chosen, gains_fp):
    """Max over per-user slot permutations of the fixed-point DCG."""
    total = 0
    chosen = list(chosen)
    for u in range(g.n_users):
        mine = [e for e in chosen if g.users[e] == u]
        best = None
        for perm in itertools.permutations(mine):
            val = sum(slot_weight_fp(gains_fp[e], i + 1) for i, e in enumerate(perm))
            best = val if best is None else max(best, val)
        total += best or 0
    return total


def enumerate_objective(g, objective):
    """(best value, list of minimizers) of ``objective(chosen)`` over feasible subgraphs."""
    best, arg = None, []
    for chosen in feasible_subgraphs(g):
        val = objective(chosen)
        if best is None or val < best:
            best, arg = val, [chosen]
        elif val == best:
            arg.append(chosen)
    return best, arg


def opt_set(g, target):
    return enumerate_objective(g, lambda ch: l1_discrepancy(g, ch, target))


def coverage(g, chosen):
    return int(np.count_nonzero(indegrees(g, chosen)))


def binary_gain_fp(g, chosen, relevant):
    hits = np.bincount(g.users[[e for e in chosen if relevant[e]]], minlength=g.n_users)
    return sum(sum(slot_weight_fp(1_000_000, i) for i in range(1, k + 1)) for k in hits.tolist())


def category_objective(g, chosen, target, labels, minimums):
    deg = indegrees(g, chosen)
    per_cat = np.bincount(labels, weights=deg, minlength=len(minimums))
    return l1_discrepancy(g, chosen, target) + int(np.maximum(np.asarray(minimums) - per_cat, 0).sum())


def two_slope_objective(g, chosen, target, threshold, s1, s2):
    over = np.maximum(indegrees(g, chosen) - np.asarray(target), 0)
    return int((2 * s1 * np.minimum(over, threshold) + 2 * s2 * np.maximum(over - threshold, 0)).sum())


def signed_rank_enumeration(a, b):
    """(W+, P(W+ >= obs), P(W+ <= obs)) by listing every sign pattern."""
    d = [x - y for x, y in zip(a, b) if x != y]
    mags = sorted(abs(x) for x in d)
    rank = {}
    i = 0
    while i < len(mags):
        j = i
        while j < len(mags) and mags[j] == mags[i]:
            j += 1
        rank[mags[i]] = (i + 1 + j) / 2
        i = j
    ranks = [rank[abs(x)] for x in d]
    obs = sum(r for r, x in zip(ranks, d) if x > 0)
    ge = le = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        w = sum(r for r, s in zip(ranks, signs) if s)
        ge += w >= obs
        le += w <= obs
    total = 2 ** len(d)
    return obs, ge / total, le / total


def gini_pairwise(d):
    """Gini via mean absolute difference, independent of the sorted formula."""
    d = np.asarray(d, dtype=float)
    r = d.size
    return float(np.abs(d[:, None] - d[None, :]).sum() / (2 * r * d.sum()))


def naive_jaccard(sets_a, sets_b):
    inter = len(sets_a & sets_b)
    union = len(sets_a | sets_b)
    return inter / union if union else 0.0


def naive_neighbors(keys, sets, size, inverted):
    """Neighbour lists by explicit sorting; ties to the lower key."""
    forward = {}
    for x in keys:
        cands = [(naive_jaccard(sets[x], sets[y]), y) for y in keys if y != x]
        cands.sort(key=lambda p: (-p[0], p[1]))
        forward[x] = [y for s, y in cands[:size] if s > 0]
    if not inverted:
        return forward
    return {x: [y for y in keys if x in forward[y]] for x in keys}


def naive_item_based(ratings, n_users, n_items, size=100, inverted=True):
    """Raw item-based scores from a dict {(u, i): r}; None where undefined."""
    raters = {i: {u for (u, j) in ratings if j == i} for i in range(n_items)}
    nbrs = naive_neighbors(list(range(n_items)), raters, size, inverted)
    out = {}
    for u in range(n_users):
        for i in range(n_items):
            if (u, i) in ratings:
                continue
            num = den = 0.0
            for j in nbrs[i]:
                if (u, j) in ratings:
                    s = naive_jaccard(raters[i], raters[j])
                    num += s * ratings[(u, j)]
                    den += s
            if den > 0:
                out[(u, i)] = num / den
    return out


def naive_user_based(ratings, n_users, n_items, size=100, inverted=True):
    rated = {u: {i for (v, i) in ratings if v == u} for u in range(n_users)}
    nbrs = naive_neighbors(list(range(n_users)), rated, size, inverted)
    out = {}
    for u in range(n_users):
        for i in range(n_items):
            if (u, i) in ratings:
                continue
            num = den = 0.0
            for v in nbrs[u]:
                if (v, i) in ratings:
                    s = naive_jaccard(rated[u], rated[v])
                    num += s * ratings[(v, i)]
                    den += s
            if den > 0:
                out[(u, i)] = num / den
    return out


def dense_walk(adj, alpha, renormalize):
    """Three-step walk probabilities from dense matrix products."""
    adj = np.asarray(adj, dtype=float)
    pu = adj / adj.sum(axis=1, keepdims=True)
    deg_i = adj.sum(axis=0)
    pi = (adj / np.where(deg_i > 0, deg_i, 1)).T
    pu, pi = pu ** alpha, pi ** alpha
    if renormalize:
        pu = pu / pu.sum(axis=1, keepdims=True)
        rs = pi.sum(axis=1, keepdims=True)
        pi = pi / np.where(rs > 0, rs, 1)
    return pu @ pi @ pu


def minmax_rows(raw):
    out = {}
    by_user = {}
    for (u, i), v in raw.items():
        by_user.setdefault(u, []).append(v)
    for (u, i), v in raw.items():
        lo, hi = min(by_user[u]), max(by_user[u])
        out[(u, i)] = 1.0 if hi == lo else (v - lo) / (hi - lo)
    return out


def synthetic_ratings(seed, n_users=40, n_items=80, lo=15, hi=35, skew=1.3):
    """``user::item::rating::ts`` text with popularity-skewed item choice."""
    rng = np.random.default_rng(seed)
    pop = 1.0 / np.arange(1, n_items + 1) ** skew
    pop /= pop.sum()
    lines = []
    for u in range(n_users):
        items = rng.choice(n_items, size=int(rng.integers(lo, hi + 1)), replace=False, p=pop)
        lines.extend(f"{u + 1}::{i + 1}::{int(rng.integers(1, 6))}::0" for i in items.tolist())
    return "\n".join(lines) + "\n"
