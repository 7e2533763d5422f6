"""Flow network containers and DIMACS min-cost flow I/O."""

from dataclasses import dataclass, field
import io

import numpy as np

from ..errors import DataError


def _int_array(values, name):
    arr = np.asarray(values)
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.array_equal(rounded, arr):
            raise ValueError(f"{name} must be integral")
        arr = rounded
    return np.ascontiguousarray(arr, dtype=np.int64).reshape(-1)


@dataclass(frozen=True, eq=False)
class FlowNetwork:
    """Directed network with integer supplies, lower bounds, capacities, costs.

    Nodes are ``0..n-1``; negative supply is demand. Arc ``k`` runs
    ``tail[k] -> head[k]``.
    """

    supply: np.ndarray
    tail: np.ndarray
    head: np.ndarray
    lower: np.ndarray
    capacity: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        for name in ("supply", "tail", "head", "lower", "capacity", "cost"):
            object.__setattr__(self, name, _int_array(getattr(self, name), name))
        m = self.tail.shape[0]
        for name in ("head", "lower", "capacity", "cost"):
            if getattr(self, name).shape[0] != m:
                raise ValueError(f"{name} has {getattr(self, name).shape[0]} entries, expected {m}")
        n = self.supply.shape[0]
        if m:
            if self.tail.min() < 0 or self.head.min() < 0 or self.tail.max() >= n or self.head.max() >= n:
                raise ValueError("arc endpoint out of range")
            if (self.lower < 0).any():
                raise ValueError("negative lower bound")
            bad = np.flatnonzero(self.lower > self.capacity)
            if bad.size:
                raise ValueError(f"arc {int(bad[0])} has lower bound above capacity")

    @property
    def n_nodes(self):
        return int(self.supply.shape[0])

    @property
    def n_arcs(self):
        return int(self.tail.shape[0])

    @property
    def big_m(self):
        """Capacity standing in for "unbounded": no integral flow exceeds it."""
        return int(self.supply[self.supply > 0].sum())

    def is_balanced(self):
        return int(self.supply.sum()) == 0

    def equals(self, other):
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("supply", "tail", "head", "lower", "capacity", "cost")
        )


class NetworkBuilder:
    """Incremental construction of a :class:`FlowNetwork`."""

    def __init__(self):
        self._supply = []
        self._arcs = []

    def add_node(self, supply=0):
        self._supply.append(int(supply))
        return len(self._supply) - 1

    def add_nodes(self, count, supply=0):
        first = len(self._supply)
        self._supply.extend([int(supply)] * count)
        return range(first, first + count)

    def set_supply(self, node, supply):
        self._supply[node] = int(supply)

    def add_arc(self, tail, head, capacity, cost=0, lower=0):
        self._arcs.append((tail, head, lower, capacity, cost))
        return len(self._arcs) - 1

    def build(self):
        arcs = np.array(self._arcs, dtype=np.int64).reshape(-1, 5)
        return FlowNetwork(
            supply=np.array(self._supply, dtype=np.int64),
            tail=arcs[:, 0],
            head=arcs[:, 1],
            lower=arcs[:, 2],
            capacity=arcs[:, 3],
            cost=arcs[:, 4],
        )


@dataclass(frozen=True, eq=False)
class FlowSolution:
    flow: np.ndarray
    cost: int
    status: str
    potentials: np.ndarray = field(default=None, repr=False)
    augmentations: int = 0

    @property
    def optimal(self):
        return self.status == "optimal"


def fix_arc_flow(net, arc, value):
    """Return a copy of ``net`` whose arc ``arc`` must carry exactly ``value``."""
    arc = int(arc)
    value = int(value)
    if not 0 <= arc < net.n_arcs:
        raise ValueError(f"arc {arc} out of range")
    if value < 0 or value > net.capacity[arc]:
        raise ValueError(f"value {value} outside [0, {int(net.capacity[arc])}] for arc {arc}")
    lower = net.lower.copy()
    capacity = net.capacity.copy()
    lower[arc] = value
    capacity[arc] = value
    return FlowNetwork(net.supply, net.tail, net.head, lower, capacity, net.cost)


def write_dimacs(net, stream=None, comment=None):
    """Write ``net`` as DIMACS ``min`` problem; returns the text if no stream."""
    out = io.StringIO() if stream is None else stream
    if comment:
        for line in str(comment).splitlines():
            out.write(f"c {line}\n")
    out.write(f"p min {net.n_nodes} {net.n_arcs}\n")
    for v in np.flatnonzero(net.supply):
        out.write(f"n {v + 1} {int(net.supply[v])}\n")
    rows = np.column_stack([net.tail + 1, net.head + 1, net.lower, net.capacity, net.cost])
    out.writelines(f"a {t} {h} {lo} {cap} {c}\n" for t, h, lo, cap, c in rows.tolist())
    if stream is None:
        return out.getvalue()
    return None


def read_dimacs(source):
    """Parse DIMACS min-cost flow text (str, text stream or lines)."""
    if isinstance(source, str):
        source = io.StringIO(source)
    n = m = None
    supply = None
    arcs = []
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode()
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        kind = parts[0]
        try:
            if kind == "p":
                if parts[1] != "min" or len(parts) != 4:
                    raise DataError("expected 'p min <nodes> <arcs>'", lineno)
                n, m = int(parts[2]), int(parts[3])
                supply = np.zeros(n, dtype=np.int64)
            elif kind == "n":
                if supply is None:
                    raise DataError("node line before problem line", lineno)
                node = int(parts[1])
                if not 1 <= node <= n:
                    raise DataError(f"node id {node} out of range", lineno)
                supply[node - 1] = int(parts[2])
            elif kind == "a":
                if supply is None:
                    raise DataError("arc line before problem line", lineno)
                if len(parts) != 6:
                    raise DataError("expected 'a <src> <dst> <low> <cap> <cost>'", lineno)
                arcs.append([int(x) for x in parts[1:]])
            else:
                raise DataError(f"unknown line type {kind!r}", lineno)
        except (ValueError, IndexError) as exc:
            if isinstance(exc, DataError):
                raise
            raise DataError(f"malformed line: {raw.strip()!r}", lineno) from None
    if supply is None:
        raise DataError("missing problem line")
    if len(arcs) != m:
        raise DataError(f"problem line declares {m} arcs, found {len(arcs)}")
    a = np.array(arcs, dtype=np.int64).reshape(-1, 5)
    if a.size and (a[:, :2].min() < 1 or a[:, :2].max() > n):
        raise DataError("arc endpoint out of range")
    return FlowNetwork(supply, a[:, 0] - 1, a[:, 1] - 1, a[:, 2], a[:, 3], a[:, 4])
