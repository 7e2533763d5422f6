"""Rating files, density filtering and per-user cross-validation folds."""

from dataclasses import dataclass
import io

import numpy as np

from .errors import DataError

DELIMITERS = {"double-colon": "::", "comma": ",", "tab": "\t"}


@dataclass(frozen=True)
class RatingTriple:
    user: str
    item: str
    rating: float


def _id_key(x):
    try:
        return (0, int(x), x)
    except ValueError:
        return (1, 0, x)


@dataclass(frozen=True, eq=False)
class RatingDataset:
    """Ratings over dense user/item indices.

    ``user_ids[u]`` and ``item_ids[i]`` hold the original identifiers.
    Rows are sorted by (user, item).
    """

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    user_ids: tuple
    item_ids: tuple
    scale: tuple = None
    duplicates: int = 0

    def __post_init__(self):
        users = np.asarray(self.users, dtype=np.int64)
        items = np.asarray(self.items, dtype=np.int64)
        ratings = np.asarray(self.ratings, dtype=np.float64)
        order = np.lexsort((items, users))
        for name, value in (("users", users[order]), ("items", items[order]), ("ratings", ratings[order])):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "user_ids", tuple(self.user_ids))
        object.__setattr__(self, "item_ids", tuple(self.item_ids))

    @property
    def n_users(self):
        return len(self.user_ids)

    @property
    def n_items(self):
        return len(self.item_ids)

    def __len__(self):
        return int(self.users.shape[0])

    def triples(self):
        for u, i, r in zip(self.users.tolist(), self.items.tolist(), self.ratings.tolist()):
            yield RatingTriple(self.user_ids[u], self.item_ids[i], r)

    def pairs(self):
        return set(zip(self.users.tolist(), self.items.tolist()))

    def subset(self, mask):
        """Same index space, only the rows selected by ``mask``."""
        return RatingDataset(self.users[mask], self.items[mask], self.ratings[mask],
                             self.user_ids, self.item_ids, self.scale)

    def user_counts(self):
        return np.bincount(self.users, minlength=self.n_users)

    def item_counts(self):
        return np.bincount(self.items, minlength=self.n_items)


def _from_raw(users, items, ratings, scale=None, duplicates=0):
    user_ids = sorted(set(users), key=_id_key)
    item_ids = sorted(set(items), key=_id_key)
    uidx = {x: k for k, x in enumerate(user_ids)}
    iidx = {x: k for k, x in enumerate(item_ids)}
    return RatingDataset([uidx[x] for x in users], [iidx[x] for x in items], ratings,
                         user_ids, item_ids, scale, duplicates)


def parse_ratings(source, format="double-colon", scale=None, header=False):
    """Read ``user<d>item<d>rating[<d>...]`` lines.

    ``source`` is a path-free text or byte stream, or a string holding the
    file content. Later duplicates of a (user, item) pair replace earlier
    ones; the number replaced is kept in ``duplicates``. With ``scale``
    given as ``(low, high)`` ratings outside it are rejected.
    """
    if format not in DELIMITERS:
        raise ValueError(f"unknown format {format!r}; expected one of {sorted(DELIMITERS)}")
    delim = DELIMITERS[format]
    if isinstance(source, (str, bytes)):
        source = io.StringIO(source.decode() if isinstance(source, bytes) else source)
    seen = {}
    duplicates = 0
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8", errors="replace")
        line = raw.strip()
        if not line or (header and lineno == 1):
            continue
        parts = line.split(delim)
        if len(parts) < 3 or not parts[0].strip() or not parts[1].strip():
            raise DataError(f"expected at least 3 fields, got {line!r}", lineno)
        try:
            rating = float(parts[2])
        except ValueError:
            raise DataError(f"rating {parts[2]!r} is not a number", lineno) from None
        if not np.isfinite(rating) or (scale is not None and not scale[0] <= rating <= scale[1]):
            raise DataError(f"rating {rating} outside scale {scale}", lineno)
        key = (parts[0].strip(), parts[1].strip())
        if key in seen:
            duplicates += 1
            del seen[key]
        seen[key] = rating
    if not seen:
        raise DataError("no ratings found")
    users, items = zip(*seen)
    return _from_raw(list(users), list(items), list(seen.values()), scale, duplicates)


def write_ratings(ds, stream=None):
    """Canonical TSV with dense ids."""
    out = io.StringIO() if stream is None else stream
    out.writelines(f"{u}\t{i}\t{r!r}\n" for u, i, r in
                   zip(ds.users.tolist(), ds.items.tolist(), ds.ratings.tolist()))
    return out.getvalue() if stream is None else None


def prefilter(ds, min_user_ratings=20, min_item_ratings=10):
    """Drop sparse users and items repeatedly until both thresholds hold."""
    if min_user_ratings < 0 or min_item_ratings < 0:
        raise ValueError("thresholds must be non-negative")
    keep = np.ones(len(ds), dtype=bool)
    while True:
        ucount = np.bincount(ds.users[keep], minlength=ds.n_users)
        icount = np.bincount(ds.items[keep], minlength=ds.n_items)
        ok = keep & (ucount[ds.users] >= min_user_ratings) & (icount[ds.items] >= min_item_ratings)
        if np.array_equal(ok, keep):
            break
        keep = ok
    if not keep.any():
        raise DataError("prefilter removed every rating")
    users = [ds.user_ids[u] for u in ds.users[keep].tolist()]
    items = [ds.item_ids[i] for i in ds.items[keep].tolist()]
    return _from_raw(users, items, ds.ratings[keep].tolist(), ds.scale, ds.duplicates)


@dataclass(frozen=True, eq=False)
class FoldSplit:
    fold: int
    n_folds: int
    train: RatingDataset
    test_relevant: frozenset
    test_size: int


def fold_assignment(ds, k=10, seed=0):
    """Fold id per rating row: shuffle each user's ratings, then deal them out."""
    if k < 2:
        raise ValueError("need at least two folds")
    counts = ds.user_counts()
    short = np.flatnonzero((counts > 0) & (counts < k))
    if short.size:
        names = [ds.user_ids[u] for u in short[:10].tolist()]
        raise DataError(f"users with fewer than {k} ratings (prefilter first): {names}")
    rng = np.random.default_rng(seed)
    fold = np.empty(len(ds), dtype=np.int64)
    ptr = np.concatenate([[0], np.cumsum(counts)])
    for u in range(ds.n_users):
        lo, hi = ptr[u], ptr[u + 1]
        if hi > lo:
            fold[lo + rng.permutation(hi - lo)] = np.arange(hi - lo) % k
    return fold


def make_folds(ds, k=10, threshold=3.0, seed=0):
    """``k`` splits; test pairs count as relevant when rated at least ``threshold``."""
    fold = fold_assignment(ds, k, seed)
    splits = []
    for f in range(k):
        test = fold == f
        rel = test & (ds.ratings >= threshold)
        pairs = frozenset(zip(ds.users[rel].tolist(), ds.items[rel].tolist()))
        splits.append(FoldSplit(f, k, ds.subset(~test), pairs, int(test.sum())))
    return splits
