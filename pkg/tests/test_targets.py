from fractions import Fraction

import numpy as np
import pytest

from divflow.errors import DataError
from divflow.graph import CandidateGraph
from divflow.targets import (
    TargetDistribution,
    blend_target,
    largest_remainder,
    proportional_target,
    read_target,
    scale_target,
    target_distance,
    uniform_target,
    write_target,
)


def graph_with(indeg, display):
    users, items = [], []
    u = 0
    for j, d in enumerate(indeg):
        for _ in range(d):
            users.append(u)
            items.append(j)
            u += 1
    l = max(u, len(display))
    c = list(display) + [0] * (l - len(display))
    return CandidateGraph(l, len(indeg), users, items, np.ones(len(users)), c)


def naive_round(values, total):
    """Reference largest-remainder rounding written directly from its definition."""
    floors = [int(v) for v in values]
    left = total - sum(floors)
    ranked = sorted(range(len(values)), key=lambda j: (floors[j] - values[j], j))
    return [f + (1 if j in ranked[:left] else 0) for j, f in enumerate(floors)]


def test_uniform_examples():
    g = CandidateGraph(3, 3, [0, 1, 2], [0, 1, 2], [1, 1, 1], [2, 2, 1])
    assert uniform_target(g).a.tolist() == [2, 2, 1]
    assert uniform_target(g.with_display([2, 2, 2])).a.tolist() == [2, 2, 2]
    assert uniform_target(g.with_display(0)).a.tolist() == [0, 0, 0]


def test_proportional_examples():
    assert proportional_target(graph_with([2, 2, 2], [1, 1, 1])).a.tolist() == [1, 1, 1]
    assert proportional_target(graph_with([4, 0], [1, 1])).a.tolist() == [2, 0]
    t = proportional_target(graph_with([3, 1], [1, 1]))
    assert t.real.tolist() == [1.5, 0.5]
    assert t.a.tolist() == [2, 0]


def test_proportional_needs_edges():
    g = CandidateGraph(1, 2, [], [], [], 0)
    with pytest.raises(ValueError):
        proportional_target(g)


def test_blend_examples():
    f = TargetDistribution.from_counts([2, 2, 2])
    p = TargetDistribution.from_counts([4, 1, 1])
    assert blend_target(f, p, 0.5).a.tolist() == [3, 2, 1]
    assert blend_target(f, p, 1.0).a.tolist() == [2, 2, 2]
    assert blend_target(f, p, 0.0).a.tolist() == [4, 1, 1]
    with pytest.raises(ValueError):
        blend_target(f, p, 1.5)
    with pytest.raises(ValueError):
        blend_target(f, p, -0.1)


def test_rounding_invariants():
    rng = np.random.default_rng(1)
    for _ in range(300):
        r = int(rng.integers(1, 12))
        total = int(rng.integers(0, 40))
        weights = rng.integers(0, 9, size=r)
        if weights.sum() == 0:
            weights[0] = 1
        values = [Fraction(total * int(w), int(weights.sum())) for w in weights]
        a = largest_remainder(values, total)
        assert a.sum() == total
        assert all(abs(x - v) < 1 for x, v in zip(a.tolist(), values))
        assert a.tolist() == naive_round(values, total)


def test_blend_sums_for_all_alpha():
    rng = np.random.default_rng(2)
    for _ in range(50):
        r = int(rng.integers(2, 10))
        total = int(rng.integers(1, 50))
        indeg = rng.integers(0, 6, size=r)
        indeg[0] += 1
        g = graph_with(indeg.tolist(), [1] * total) if indeg.sum() >= total else None
        if g is None:
            continue
        f, p = uniform_target(g), proportional_target(g)
        for alpha in np.linspace(0, 1, 11):
            d = blend_target(f, p, float(alpha))
            assert d.total == total
            assert np.all(np.abs(d.a - d.real) < 1)


def test_blend_moves_toward_f():
    f = TargetDistribution.from_exact([Fraction(10, 3)] * 3, 10)
    p = TargetDistribution.from_counts([8, 1, 1])
    prev = None
    for alpha in np.linspace(0, 1, 21):
        real = blend_target(f, p, float(alpha)).real
        if prev is not None:
            assert real[1] >= prev[1] and real[0] <= prev[0]
        prev = real


def test_scale_target():
    t = TargetDistribution.from_counts([6, 3, 3])
    assert scale_target(t, 4).a.tolist() == [2, 1, 1]
    assert scale_target(t, 0).a.tolist() == [0, 0, 0]


def test_target_distance():
    a = TargetDistribution.from_counts([2, 2, 2])
    b = TargetDistribution.from_counts([4, 1, 1])
    assert target_distance(a, b) == pytest.approx(4 / 12)
    assert target_distance(a, a) == 0.0


def test_target_file_round_trip():
    t = TargetDistribution.from_counts([3, 0, 2])
    text = write_target(t)
    assert text.splitlines() == ["#total=5", "0\t3", "1\t0", "2\t2"]
    assert read_target(text).a.tolist() == [3, 0, 2]


def test_target_file_errors():
    with pytest.raises(DataError, match="line 2"):
        read_target("#total=1\n0 1\n")
    with pytest.raises(DataError):
        read_target("#total=9\n0\t1\n")
