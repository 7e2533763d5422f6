"""Target indegree distributions.

Real-valued targets are carried as exact fractions and rounded with the
largest-remainder rule, so the integer target always sums to the display
total and no entry moves by a full unit.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import io

import numpy as np

from .errors import DataError


def largest_remainder(values, total):
    """Round non-negative ``values`` (exact Fractions summing to ``total``).

    Floors first, then hands the leftover units to the largest fractional
    parts; ties go to the lower index.
    """
    floors = [v.numerator // v.denominator for v in values]
    rems = [v - f for v, f in zip(values, floors)]
    left = int(total) - sum(floors)
    if left < 0 or left > len(values):
        raise ValueError("values do not sum to total")
    order = sorted(range(len(values)), key=lambda j: (-rems[j], j))
    out = np.array(floors, dtype=np.int64)
    out[order[:left]] += 1
    return out


@dataclass(frozen=True, eq=False)
class TargetDistribution:
    """Integer targets ``a`` with their pre-rounding real values."""

    a: np.ndarray
    real: np.ndarray
    exact: tuple = field(default=None, repr=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.int64).reshape(-1)
        if (a < 0).any():
            raise ValueError("targets must be non-negative")
        exact = self.exact
        if exact is None:
            exact = tuple(Fraction(float(x)) for x in np.asarray(self.real, dtype=np.float64))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "real", np.array([float(x) for x in exact]))
        object.__setattr__(self, "exact", tuple(exact))

    @property
    def total(self):
        return int(self.a.sum())

    @classmethod
    def from_exact(cls, values, total):
        values = tuple(Fraction(v) for v in values)
        return cls(largest_remainder(values, total), None, values)

    @classmethod
    def from_counts(cls, a):
        a = np.asarray(a, dtype=np.int64)
        return cls(a, None, tuple(Fraction(int(x)) for x in a))


def uniform_target(g):
    """Every item aims for the same share of the display total."""
    total = g.total_display
    share = Fraction(total, g.n_items)
    return TargetDistribution.from_exact([share] * g.n_items, total)


def proportional_target(g):
    """Supergraph indegrees rescaled to the display total."""
    deg = g.in_degree
    s = int(deg.sum())
    if s == 0:
        raise ValueError("supergraph has no edges")
    total = g.total_display
    return TargetDistribution.from_exact([Fraction(total * int(d), s) for d in deg], total)


def blend_target(f, p, alpha, total=None):
    """``alpha * f + (1 - alpha) * p`` on the real targets, then rounded."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if len(f.exact) != len(p.exact):
        raise ValueError("targets cover different item sets")
    if total is None:
        total = f.total
    al = Fraction(alpha)
    values = [al * x + (1 - al) * y for x, y in zip(f.exact, p.exact)]
    if sum(values) != total:
        raise ValueError("blended targets do not sum to total")
    return TargetDistribution.from_exact(values, total)


def scale_target(t, total):
    """Rescale real targets to a new total (used for per-batch solves)."""
    s = sum(t.exact)
    if s == 0:
        if total:
            raise ValueError("cannot scale an all-zero target to a positive total")
        return TargetDistribution.from_exact(t.exact, 0)
    factor = Fraction(int(total)) / s
    return TargetDistribution.from_exact([x * factor for x in t.exact], total)


def target_distance(t1, t2):
    """L1 distance between integer targets divided by twice the total."""
    total = t1.total
    if total == 0:
        return 0.0
    return float(np.abs(t1.a - t2.a).sum()) / (2 * total)


def write_target(t, stream=None):
    out = io.StringIO() if stream is None else stream
    out.write(f"#total={t.total}\n")
    out.writelines(f"{j}\t{int(x)}\n" for j, x in enumerate(t.a.tolist()))
    return out.getvalue() if stream is None else None


def read_target(source):
    if isinstance(source, str):
        source = io.StringIO(source)
    total = None
    pairs = []
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode()
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("#total="):
                total = int(line[7:])
            continue
        try:
            j, x = line.split("\t")
            pairs.append((int(j), int(x)))
        except ValueError:
            raise DataError(f"malformed target line {line!r}", lineno) from None
    a = np.zeros(len(pairs), dtype=np.int64)
    for j, x in pairs:
        if not 0 <= j < len(pairs):
            raise DataError(f"item {j} out of range")
        a[j] = x
    if total is not None and total != int(a.sum()):
        raise DataError(f"targets sum to {int(a.sum())}, header says {total}")
    return TargetDistribution.from_counts(a)
