"""Collaborative-filtering scorers and top-k candidate extraction.

Scores are held in a dense users x items matrix with NaN marking pairs that
have no score. Pairs rated in training never carry a score.
"""

from dataclasses import dataclass
import io

import numpy as np
from scipy import sparse

from .errors import DataError
from .graph import CandidateGraph

PROVENANCES = ("IB", "UB", "RW", "imported")


def normalize_per_user(raw):
    """Min-max scale each row's finite entries to [0, 1]; constant rows map to 1."""
    raw = np.asarray(raw, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        lo = np.nanmin(np.where(np.isnan(raw), np.inf, raw), axis=1, keepdims=True)
        hi = np.nanmax(np.where(np.isnan(raw), -np.inf, raw), axis=1, keepdims=True)
        span = hi - lo
        out = np.where(span > 0, (raw - lo) / np.where(span > 0, span, 1.0), 1.0)
    out[np.isnan(raw)] = np.nan
    return out


@dataclass(frozen=True, eq=False)
class RelevanceFunction:
    scores: np.ndarray
    provenance: str = "imported"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 2:
            raise ValueError("scores must be a users x items matrix")
        finite = s[~np.isnan(s)]
        if finite.size and (finite.min() < 0 or finite.max() > 1):
            raise ValueError("scores must be normalized to [0, 1]")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)

    @property
    def n_users(self):
        return self.scores.shape[0]

    @property
    def n_items(self):
        return self.scores.shape[1]

    def defined(self):
        return ~np.isnan(self.scores)

    def item_sums(self):
        """Per-item sum of scores over users that have one."""
        return np.nansum(self.scores, axis=0)

    @classmethod
    def from_raw(cls, raw, provenance, train=None):
        raw = np.array(raw, dtype=np.float64)
        if train is not None:
            raw[train.users, train.items] = np.nan
        return cls(normalize_per_user(raw), provenance)


@dataclass(frozen=True)
class NeighborhoodModel:
    size: int = 100
    inverted: bool = True

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("neighborhood size must be positive")


def _matrices(train):
    shape = (train.n_users, train.n_items)
    R = sparse.csr_matrix((train.ratings, (train.users, train.items)), shape=shape)
    B = sparse.csr_matrix((np.ones(len(train)), (train.users, train.items)), shape=shape)
    return R, B


def jaccard(B):
    """Row-by-row Jaccard similarity of a binary sparse matrix (dense result)."""
    inter = (B @ B.T).toarray()
    sizes = np.asarray(B.sum(axis=1)).ravel()
    union = sizes[:, None] + sizes[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(union > 0, inter / np.where(union > 0, union, 1), 0.0)
    return sim


def neighborhood(sim, model):
    """Sparse ``W`` with ``W[x, y] = sim(x, y)`` when ``y`` is a neighbour of ``x``.

    Forward neighbours of ``x`` are its ``size`` most similar other rows
    (ties to the lower index, zero similarity never counts). Under the
    inverted policy ``y`` neighbours ``x`` when ``x`` is among ``y``'s
    forward neighbours.
    """
    n = sim.shape[0]
    s = sim.copy()
    np.fill_diagonal(s, -np.inf)
    k = min(model.size, max(n - 1, 0))
    if k == 0:
        return sparse.csr_matrix((n, n))
    top = np.argsort(-s, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    cols = top.ravel()
    vals = s[rows, cols]
    keep = vals > 0
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    if model.inverted:
        rows, cols = cols, rows
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _weighted_average(num, den, train, provenance):
    with np.errstate(invalid="ignore", divide="ignore"):
        raw = np.where(den > 0, num / np.where(den > 0, den, 1), np.nan)
    return RelevanceFunction.from_raw(raw, provenance, train)


def score_item_based(train, model=NeighborhoodModel()):
    """Similarity-weighted mean of the user's own ratings on neighbours of the item."""
    R, B = _matrices(train)
    W = neighborhood(jaccard(B.T.tocsr()), model)  # W[i, j]: j neighbours i
    num = (R @ W.T).toarray()
    den = (B @ W.T).toarray()
    return _weighted_average(num, den, train, "IB")


def score_user_based(train, model=NeighborhoodModel()):
    """Similarity-weighted mean of neighbouring users' ratings on the item."""
    R, B = _matrices(train)
    W = neighborhood(jaccard(B), model)  # W[u, v]: v neighbours u
    num = (W @ R).toarray()
    den = (W @ B).toarray()
    return _weighted_average(num, den, train, "UB")


def score_random_walk(train, alpha=1.5, renormalize=False):
    """Probability-weighted count of 3-step walks user -> item -> user -> item.

    Each transition probability is raised to ``alpha``. With
    ``renormalize`` the powered rows are rescaled to sum to one again.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    _, B = _matrices(train)
    udeg = np.asarray(B.sum(axis=1)).ravel()
    isolated = np.flatnonzero(udeg == 0)
    if isolated.size:
        raise DataError(f"users without training interactions: {isolated[:20].tolist()}")
    ideg = np.asarray(B.sum(axis=0)).ravel()

    def step(M, deg):
        P = sparse.diags(1.0 / np.maximum(deg, 1)) @ M
        P = P.power(alpha)
        if renormalize:
            rs = np.asarray(P.sum(axis=1)).ravel()
            P = sparse.diags(1.0 / np.where(rs > 0, rs, 1)) @ P
        return P.tocsr()

    P_ui = step(B, udeg)
    P_iu = step(B.T.tocsr(), ideg)
    # rounding merges summation-order noise, so equal walk counts stay tied
    walk = np.round((P_ui @ (P_iu @ P_ui)).toarray(), 12)
    raw = np.where(walk > 0, walk, np.nan)
    return RelevanceFunction.from_raw(raw, "RW", train)


def top_k_candidates(rel, k, display=10):
    """Each user's ``k`` best-scored items as a candidate graph (ties to lower item id)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    s = rel.scores
    key = np.where(np.isnan(s), np.inf, -s)
    order = np.argsort(key, axis=1, kind="stable")[:, :k]
    take = np.take_along_axis(~np.isnan(s), order, axis=1)
    users = np.repeat(np.arange(rel.n_users), order.shape[1])[take.ravel()]
    items = order.ravel()[take.ravel()]
    return CandidateGraph(rel.n_users, rel.n_items, users, items, s[users, items], display)


def import_scores(source, n_users=None, n_items=None, train=None):
    """Load ``user<TAB>item<TAB>score`` lines (dense ids) and normalize per user."""
    if isinstance(source, (str, bytes)):
        source = io.StringIO(source.decode() if isinstance(source, bytes) else source)
    users, items, vals = [], [], []
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode()
        line = raw.strip()
        if not line:
            continue
        parts = line.split("\t")
        try:
            if len(parts) != 3:
                raise ValueError
            u, i, v = int(parts[0]), int(parts[1]), float(parts[2])
            if u < 0 or i < 0 or not np.isfinite(v):
                raise ValueError
        except ValueError:
            raise DataError(f"malformed score line {line!r}", lineno) from None
        users.append(u)
        items.append(i)
        vals.append(v)
    l = n_users if n_users is not None else (max(users) + 1 if users else 0)
    r = n_items if n_items is not None else (max(items) + 1 if items else 0)
    if users and (max(users) >= l or max(items) >= r):
        raise DataError("score ids exceed the declared user or item count")
    raw = np.full((l, r), np.nan)
    raw[users, items] = vals
    return RelevanceFunction.from_raw(raw, "imported", train)


def write_scores(rel, stream=None):
    out = io.StringIO() if stream is None else stream
    users, items = np.nonzero(rel.defined())
    vals = rel.scores[users, items]
    out.writelines(f"{u}\t{i}\t{v!r}\n" for u, i, v in zip(users.tolist(), items.tolist(), vals.tolist()))
    return out.getvalue() if stream is None else None
