"""Candidate supergraphs and selected recommendation subgraphs."""

from dataclasses import dataclass, field
import io

import numpy as np

from .errors import DataError

SCALE = 1_000_000


def to_fixed(weights):
    return np.rint(np.asarray(weights, dtype=np.float64) * SCALE).astype(np.int64)


def _format_fixed(fp):
    return f"{fp // SCALE}.{fp % SCALE:06d}"


def _parse_fixed(text):
    text = text.strip()
    neg = text.startswith("-")
    if neg or text.startswith("+"):
        text = text[1:]
    whole, _, frac = text.partition(".")
    if not whole.isdigit() or (frac and not frac.isdigit()) or len(frac) > 6:
        raise ValueError(text)
    value = int(whole) * SCALE + int((frac or "0").ljust(6, "0"))
    return -value if neg else value


@dataclass(frozen=True, eq=False)
class CandidateGraph:
    """Bipartite graph of permissible user -> item recommendations.

    Edges are kept sorted by (user, item); edge ``e`` is the ``e``-th entry of
    ``users``/``items``/``weights``. ``display[u]`` is the exact number of
    recommendations user ``u`` must receive. Weights live in [0, 1] and are
    mirrored in ``weights_fp`` as integer micro-units.
    """

    n_users: int
    n_items: int
    users: np.ndarray
    items: np.ndarray
    weights: np.ndarray
    display: np.ndarray
    weights_fp: np.ndarray = field(default=None)

    def __post_init__(self):
        users = np.asarray(self.users, dtype=np.int64).reshape(-1)
        items = np.asarray(self.items, dtype=np.int64).reshape(-1)
        if self.weights_fp is not None:
            wfp = np.asarray(self.weights_fp, dtype=np.int64).reshape(-1)
            weights = wfp / SCALE
        else:
            weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
            wfp = None
        display = np.broadcast_to(np.asarray(self.display, dtype=np.int64), (int(self.n_users),)).copy()
        if not (users.shape == items.shape == weights.shape):
            raise ValueError("users, items and weights must have equal length")
        if users.size:
            if users.min() < 0 or users.max() >= self.n_users:
                raise ValueError("user index out of range")
            if items.min() < 0 or items.max() >= self.n_items:
                raise ValueError("item index out of range")
        if np.isnan(weights).any() or (weights < 0).any() or (weights > 1).any():
            raise ValueError("edge weights must lie in [0, 1]")
        if (display < 0).any():
            raise ValueError("display constraints must be non-negative")
        order = np.lexsort((items, users))
        users, items, weights = users[order], items[order], weights[order]
        key = users * int(self.n_items) + items
        if users.size > 1 and (np.diff(key) == 0).any():
            dup = int(np.flatnonzero(np.diff(key) == 0)[0])
            raise ValueError(f"duplicate edge ({int(users[dup])}, {int(items[dup])})")
        wfp = to_fixed(weights) if wfp is None else wfp[order]
        for name, value in (("users", users), ("items", items), ("weights", weights),
                            ("display", display), ("weights_fp", wfp)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "n_users", int(self.n_users))
        object.__setattr__(self, "n_items", int(self.n_items))

    @property
    def n_edges(self):
        return int(self.users.shape[0])

    @property
    def out_degree(self):
        return np.bincount(self.users, minlength=self.n_users)

    @property
    def in_degree(self):
        return np.bincount(self.items, minlength=self.n_items)

    @property
    def user_ptr(self):
        """CSR offsets: edges of user ``u`` are ``user_ptr[u]:user_ptr[u+1]``."""
        ptr = np.zeros(self.n_users + 1, dtype=np.int64)
        np.cumsum(self.out_degree, out=ptr[1:])
        return ptr

    @property
    def total_display(self):
        return int(self.display.sum())

    def with_display(self, display):
        return CandidateGraph(self.n_users, self.n_items, self.users, self.items,
                              self.weights, display, weights_fp=self.weights_fp)

    def edge_index(self, user, item):
        """Index of edge (user, item), or -1."""
        key = self.users * self.n_items + self.items
        pos = int(np.searchsorted(key, user * self.n_items + item))
        if pos < key.size and key[pos] == user * self.n_items + item:
            return pos
        return -1


def validate_feasible(g):
    """Users whose candidate out-degree is below their display constraint."""
    return np.flatnonzero(g.out_degree < g.display).tolist()


def clamp_display(g):
    """Copy of ``g`` with ``display[u] = min(display[u], out-degree of u)``."""
    return g.with_display(np.minimum(g.display, g.out_degree))


def write_graph(g, stream=None, chosen=None):
    """TSV dump: header ``#l=.. r=.. c=..`` then ``u<TAB>v<TAB>weight`` lines.

    ``chosen`` optionally restricts the body to a subset of edge indices.
    """
    out = io.StringIO() if stream is None else stream
    out.write(f"#l={g.n_users} r={g.n_items} c={','.join(map(str, g.display.tolist()))}\n")
    idx = range(g.n_edges) if chosen is None else chosen
    users, items, wfp = g.users.tolist(), g.items.tolist(), g.weights_fp.tolist()
    out.writelines(f"{users[e]}\t{items[e]}\t{_format_fixed(wfp[e])}\n" for e in idx)
    return out.getvalue() if stream is None else None


def _parse_header(line):
    fields = dict(part.split("=", 1) for part in line[1:].split())
    l, r = int(fields["l"]), int(fields["r"])
    c = [int(x) for x in fields["c"].split(",")] if fields.get("c") else []
    if len(c) != l:
        raise ValueError("display vector length differs from l")
    return l, r, c


def read_graph(source):
    """Inverse of :func:`write_graph`; returns a :class:`CandidateGraph`."""
    if isinstance(source, str):
        source = io.StringIO(source)
    lines = iter(source)
    try:
        header = next(lines)
    except StopIteration:
        raise DataError("empty graph file") from None
    if isinstance(header, bytes):
        header = header.decode()
    try:
        l, r, c = _parse_header(header.strip())
    except (KeyError, ValueError):
        raise DataError("bad graph header", 1) from None
    users, items, wfp = [], [], []
    for lineno, raw in enumerate(lines, start=2):
        if isinstance(raw, bytes):
            raw = raw.decode()
        if not raw.strip():
            continue
        parts = raw.rstrip("\n").split("\t")
        try:
            users.append(int(parts[0]))
            items.append(int(parts[1]))
            wfp.append(_parse_fixed(parts[2]))
        except (ValueError, IndexError):
            raise DataError(f"malformed edge line {raw.strip()!r}", lineno) from None
    try:
        return CandidateGraph(l, r, users, items, None, c,
                              weights_fp=np.array(wfp, dtype=np.int64))
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _default_rank(g, chosen):
    users = g.users[chosen]
    order = np.lexsort((g.items[chosen], -g.weights_fp[chosen], users))
    rank = np.empty(chosen.size, dtype=np.int64)
    sorted_users = users[order]
    first = np.ones(chosen.size, dtype=bool)
    first[1:] = sorted_users[1:] != sorted_users[:-1]
    group_start = np.maximum.accumulate(np.where(first, np.arange(chosen.size), 0))
    rank[order] = np.arange(chosen.size) - group_start + 1
    return rank


@dataclass(frozen=True, eq=False)
class SolutionSubgraph:
    """A selection of candidate edges with a per-user display ranking.

    ``chosen`` holds sorted edge indices into ``graph``; ``rank[k]`` is the
    1-based slot of edge ``chosen[k]`` in its user's list.
    """

    graph: CandidateGraph
    chosen: np.ndarray
    rank: np.ndarray = None

    def __post_init__(self):
        chosen = np.asarray(self.chosen, dtype=np.int64).reshape(-1)
        rank = None if self.rank is None else np.asarray(self.rank, dtype=np.int64).reshape(-1)
        order = np.argsort(chosen, kind="stable")
        chosen = chosen[order]
        if chosen.size:
            if chosen[0] < 0 or chosen[-1] >= self.graph.n_edges:
                raise ValueError("chosen edge index out of range")
            if (np.diff(chosen) == 0).any():
                raise ValueError("edge chosen twice")
        if rank is None:
            rank = _default_rank(self.graph, chosen)
        else:
            if rank.shape != chosen.shape:
                raise ValueError("rank must align with chosen")
            rank = rank[order]
        chosen.setflags(write=False)
        rank.setflags(write=False)
        object.__setattr__(self, "chosen", chosen)
        object.__setattr__(self, "rank", rank)

    @property
    def users(self):
        return self.graph.users[self.chosen]

    @property
    def items(self):
        return self.graph.items[self.chosen]

    @property
    def weights_fp(self):
        return self.graph.weights_fp[self.chosen]

    def out_degree(self):
        return np.bincount(self.users, minlength=self.graph.n_users)

    def is_feasible(self):
        return bool(np.array_equal(self.out_degree(), self.graph.display))

    def total_relevance_fp(self):
        return int(self.weights_fp.sum())

    def total_relevance(self):
        return float(self.graph.weights[self.chosen].sum())

    def ranked_lists(self):
        """Per-user item lists in display order."""
        lists = [[] for _ in range(self.graph.n_users)]
        order = np.lexsort((self.rank, self.users))
        for e in self.chosen[order].tolist():
            lists[int(self.graph.users[e])].append(int(self.graph.items[e]))
        return lists

    def pairs(self):
        return set(zip(self.users.tolist(), self.items.tolist()))


def indegree_vector(h):
    """Number of chosen edges entering each item."""
    return np.bincount(h.items, minlength=h.graph.n_items)


def write_solution(h, stream=None):
    """Graph-style TSV of the chosen edges with a trailing rank column."""
    g = h.graph
    out = io.StringIO() if stream is None else stream
    out.write(f"#l={g.n_users} r={g.n_items} c={','.join(map(str, g.display.tolist()))}\n")
    order = np.lexsort((h.rank, h.users))
    for k in order.tolist():
        e = int(h.chosen[k])
        out.write(f"{int(g.users[e])}\t{int(g.items[e])}\t{_format_fixed(int(g.weights_fp[e]))}\t{int(h.rank[k])}\n")
    return out.getvalue() if stream is None else None


def read_solution(source, graph):
    """Parse :func:`write_solution` output against its parent ``graph``."""
    if isinstance(source, str):
        source = io.StringIO(source)
    lines = iter(source)
    next(lines, None)
    chosen, rank = [], []
    for lineno, raw in enumerate(lines, start=2):
        if isinstance(raw, bytes):
            raw = raw.decode()
        if not raw.strip():
            continue
        parts = raw.rstrip("\n").split("\t")
        try:
            u, v = int(parts[0]), int(parts[1])
            slot = int(parts[3]) if len(parts) > 3 else None
        except (ValueError, IndexError):
            raise DataError(f"malformed solution line {raw.strip()!r}", lineno) from None
        e = graph.edge_index(u, v)
        if e < 0:
            raise DataError(f"edge ({u}, {v}) not in candidate graph", lineno)
        chosen.append(e)
        rank.append(slot)
    if any(s is None for s in rank):
        rank = None
    return SolutionSubgraph(graph, chosen, rank)
