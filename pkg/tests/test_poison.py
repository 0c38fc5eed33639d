"""Poison injection: counts, label policy, determinism."""

from fractions import Fraction

import numpy as np
import pytest

import padex as px
from padex.data import label_seed, row_instance
from padex.errors import ConfigError, DataError
from padex.poison import injected_count, severity_grid


@pytest.fixture(scope="module")
def train60(default_params, default_solver):
    return px.generate(60, 4, 12, default_params, default_solver, seed=7)


def test_injected_count_examples():
    assert injected_count(800, 0.2) == 200
    assert injected_count(100, 0.0) == 0
    assert injected_count(60, 0.4) == 40
    assert injected_count(1, 0.4) == 1


def test_injected_count_realized_fraction():
    # realized fraction lands in [level, level + 1/(n+m)) for every cell
    rng = np.random.default_rng(3)
    levels = ["0.05", "0.1", "0.15", "0.2", "0.25", "0.3", "0.33", "0.4", "0.49"]
    for _ in range(300):
        n = int(rng.integers(1, 5000))
        level = Fraction(str(rng.choice(levels)))
        m = injected_count(n, float(level))
        realized = Fraction(m, n + m)
        assert level <= realized < level + Fraction(1, n + m)


def test_poison_config_validation():
    with pytest.raises(ConfigError):
        px.PoisonConfig(level=0.5, seed=0)
    with pytest.raises(ConfigError):
        px.PoisonConfig(level=-0.1, seed=0)
    with pytest.raises(ConfigError):
        px.PoisonConfig(level=0.2, seed=0, max_resample=0)


def test_poison_rejects_bad_inputs(train60, default_params, default_solver):
    cfg = px.PoisonConfig(level=0.2, seed=1)
    once = px.poison(train60, cfg, default_params, default_solver)
    with pytest.raises(DataError):
        px.poison(once, cfg, default_params, default_solver)  # already dirty
    empty = px.Dataset(np.empty((0, 8)), np.empty(0, int), np.empty(0, bool),
                       dict(train60.meta))
    with pytest.raises(DataError):
        px.poison(empty, cfg, default_params, default_solver)
    bare = px.Dataset(train60.features, train60.labels, train60.poisoned_flags, {})
    with pytest.raises(DataError):
        px.poison(bare, cfg, default_params, default_solver)


def test_poison_level_zero_is_a_clean_copy(train60, default_params, default_solver):
    out = px.poison(train60, px.PoisonConfig(level=0.0, seed=5),
                    default_params, default_solver)
    assert out.n_rows == train60.n_rows
    assert np.array_equal(out.features, train60.features)
    assert np.array_equal(out.labels, train60.labels)
    assert not out.poisoned_flags.any()
    assert out.meta["poison_level"] == 0.0
    assert out.meta["poison_fallbacks"] == 0
    # a copy, not a view
    out.features[0, 0] += 1.0
    assert out.features[0, 0] != train60.features[0, 0]


def test_poison_appends_and_keeps_clean_rows_verbatim(train60, default_params,
                                                      default_solver):
    n = train60.n_rows
    out = px.poison(train60, px.PoisonConfig(level=0.25, seed=2),
                    default_params, default_solver)
    m = injected_count(n, 0.25)
    assert out.n_rows == n + m
    assert np.array_equal(out.features[:n], train60.features)
    assert np.array_equal(out.labels[:n], train60.labels)
    assert not out.poisoned_flags[:n].any()
    assert out.poisoned_flags[n:].all()
    assert out.meta["poison_level"] == 0.25
    assert out.meta["poison_seed"] == 2


def test_fake_labels_follow_the_rival_policy(train60, default_params,
                                             default_solver):
    # oracle: re-solve each fake layout, demand a different, strictly worse
    # coalition, and when a strictly-worse singleton exists demand exactly
    # the best one (welfare desc, ties to the lower mask)
    out = px.poison(train60, px.PoisonConfig(level=0.3, seed=4),
                    default_params, default_solver)
    assert out.meta["poison_fallbacks"] == 0
    n = train60.n_rows
    for r in range(n, out.n_rows):
        inst = row_instance(out, r)
        sol = px.solve(inst, default_params, default_solver,
                       label_seed(train60.meta["seed"], inst.agents))
        assert sol.converged
        got = int(out.labels[r])
        assert got != sol.coalition
        assert px.coalition_welfare(got, inst, default_params) < sol.welfare
        singles = sorted(
            ((px.coalition_welfare(1 << i, inst, default_params), -(1 << i))
             for i in range(inst.n_agents)), reverse=True)
        best = next((-neg for w, neg in singles
                     if -neg != sol.coalition and w < sol.welfare), None)
        if best is not None:
            assert got == best


def test_lower_level_is_a_prefix_of_higher(train60, default_params, default_solver):
    lo = px.poison(train60, px.PoisonConfig(level=0.1, seed=9),
                   default_params, default_solver)
    hi = px.poison(train60, px.PoisonConfig(level=0.3, seed=9),
                   default_params, default_solver)
    n = train60.n_rows
    m_lo = lo.n_rows - n
    assert np.array_equal(lo.features[n:], hi.features[n:n + m_lo])
    assert np.array_equal(lo.labels[n:], hi.labels[n:n + m_lo])


def test_poison_determinism(train60, default_params, default_solver):
    a = px.poison(train60, px.PoisonConfig(level=0.2, seed=3),
                  default_params, default_solver)
    b = px.poison(train60, px.PoisonConfig(level=0.2, seed=3),
                  default_params, default_solver)
    c = px.poison(train60, px.PoisonConfig(level=0.2, seed=30),
                  default_params, default_solver)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)
    assert not np.array_equal(a.features, c.features)


def test_severity_grid_contents():
    grid = severity_grid()
    assert grid == [0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40]
