"""Mann-Whitney U, label distributions, total variation."""

import math
from collections import Counter

import numpy as np
import pytest
import scipy.stats

import padex as px
from padex.errors import ConfigError
from padex.stats import label_distribution, tv_distance


def u_by_hand(xs, ys):
    # literal definition: pairwise wins plus half-ties
    u = 0.0
    for x in xs:
        for y in ys:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


def p_by_hand(xs, ys):
    n1, n2 = len(xs), len(ys)
    n = n1 + n2
    u = u_by_hand(xs, ys)
    ties = Counter(list(xs) + list(ys))
    tie_sum = sum(t ** 3 - t for t in ties.values())
    var = (n1 * n2 / 12.0) * ((n + 1) - tie_sum / (n * (n - 1)))
    if var <= 0:
        return u, 0.0, 1.0
    diff = u - n1 * n2 / 2.0
    z = (diff - math.copysign(0.5, diff)) / math.sqrt(var) if abs(diff) > 0.5 else 0.0
    return u, z, math.erfc(abs(z) / math.sqrt(2.0))


def random_case(rng):
    n1 = int(rng.integers(1, 31))
    n2 = int(rng.integers(1, 31))
    if rng.random() < 0.5:  # small alphabet forces heavy ties
        xs = rng.integers(0, 6, size=n1).astype(float)
        ys = rng.integers(0, 6, size=n2).astype(float)
    else:
        xs = rng.normal(size=n1)
        ys = rng.normal(size=n2) + rng.normal()
    return xs, ys


def test_u_matches_pair_count_oracle():
    rng = np.random.default_rng(12)
    for _ in range(1000):
        xs, ys = random_case(rng)
        res = px.mann_whitney_u(xs, ys)
        u, z, p = p_by_hand(xs, ys)
        assert res.u == u  # exact: both are sums of halves
        assert res.z == pytest.approx(z, abs=1e-12)
        assert res.p_two_sided == pytest.approx(p, abs=1e-12)
        assert res.n1 == len(xs) and res.n2 == len(ys)


def test_u_antisymmetry():
    rng = np.random.default_rng(21)
    for _ in range(200):
        xs, ys = random_case(rng)
        a = px.mann_whitney_u(xs, ys)
        b = px.mann_whitney_u(ys, xs)
        assert a.u + b.u == len(xs) * len(ys)
        assert a.p_two_sided == pytest.approx(b.p_two_sided, abs=1e-15)


def test_identical_samples_are_maximally_unsurprising():
    xs = np.array([3.0, 1.0, 4.0, 1.0, 5.0])
    res = px.mann_whitney_u(xs, xs)
    assert res.u == len(xs) ** 2 / 2.0
    assert res.z == 0.0
    assert res.p_two_sided == 1.0
    # fully tied pooled sample: variance degenerates
    res = px.mann_whitney_u([7.0, 7.0], [7.0, 7.0, 7.0])
    assert res.z == 0.0 and res.p_two_sided == 1.0 and res.tie_corrected


def test_textbook_separation_example():
    res = px.mann_whitney_u([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert res.u == 0.0
    assert res.z == pytest.approx(-4.0 / math.sqrt(5.25), abs=1e-12)
    assert res.p_two_sided == pytest.approx(0.0809, abs=5e-4)
    assert not res.tie_corrected


def test_monotone_transform_invariance():
    rng = np.random.default_rng(5)
    xs = rng.integers(0, 10, size=20).astype(float)
    ys = rng.integers(0, 10, size=15).astype(float)
    base = px.mann_whitney_u(xs, ys)
    for f in (lambda v: 3.0 * v + 7.0, np.exp, lambda v: v ** 3):
        res = px.mann_whitney_u(f(xs), f(ys))
        assert res.u == base.u
        assert res.z == base.z
        assert res.p_two_sided == base.p_two_sided


def test_agrees_with_scipy_asymptotic():
    rng = np.random.default_rng(8)
    checked = 0
    while checked < 300:
        xs, ys = random_case(rng)
        res = px.mann_whitney_u(xs, ys)
        if res.z == 0.0:  # scipy handles the near-mean band differently
            continue
        ref = scipy.stats.mannwhitneyu(xs, ys, alternative="two-sided",
                                       method="asymptotic", use_continuity=True)
        assert res.u == float(ref.statistic)
        assert res.p_two_sided == pytest.approx(float(ref.pvalue), abs=1e-9)
        checked += 1


def test_mann_whitney_input_validation():
    with pytest.raises(ConfigError):
        px.mann_whitney_u([], [1.0])
    with pytest.raises(ConfigError):
        px.mann_whitney_u([1.0], [])
    with pytest.raises(ConfigError):
        px.mann_whitney_u(np.zeros((2, 2)), [1.0])


def test_label_distribution_basics():
    dist = label_distribution([3, 1, 3, 3, 7, 1])
    assert list(dist.keys()) == [1, 3, 7]  # ascending
    assert dist[1] == pytest.approx(2 / 6)
    assert dist[3] == pytest.approx(3 / 6)
    assert dist[7] == pytest.approx(1 / 6)
    assert math.fsum(dist.values()) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ConfigError):
        label_distribution([])


def test_tv_distance_properties():
    p = {0: 0.5, 1: 0.5}
    q = {0: 0.25, 1: 0.75}
    assert tv_distance(p, p) == 0.0
    assert tv_distance(p, q) == pytest.approx(0.25, abs=1e-15)
    assert tv_distance(q, p) == tv_distance(p, q)
    assert tv_distance({0: 1.0}, {5: 1.0}) == 1.0  # disjoint support
    with pytest.raises(ConfigError):
        tv_distance({0: 0.9}, q)
    with pytest.raises(ConfigError):
        tv_distance({0: 1.5, 1: -0.5}, q)


def test_tv_distance_random_symmetry_and_bounds():
    rng = np.random.default_rng(30)
    for _ in range(100):
        ks = rng.choice(16, size=int(rng.integers(1, 8)), replace=False)
        w = rng.random(len(ks))
        p = {int(k): float(v) for k, v in zip(ks, w / w.sum())}
        ks2 = rng.choice(16, size=int(rng.integers(1, 8)), replace=False)
        w2 = rng.random(len(ks2))
        q = {int(k): float(v) for k, v in zip(ks2, w2 / w2.sum())}
        d = tv_distance(p, q)
        assert 0.0 <= d <= 1.0 + 1e-12
        assert d == pytest.approx(tv_distance(q, p), abs=1e-15)