"""Shared fixtures. The full-size dataset, split and model are session
scoped because the acceptance criteria and a few unit tests all work off
the same default experiment."""

import numpy as np
import pytest

import padex as px
from padex._rng import mix64


@pytest.fixture(scope="session")
def default_params():
    return px.PayoffParams()


@pytest.fixture(scope="session")
def default_solver():
    return px.SolverConfig()


@pytest.fixture(scope="session")
def run_forest():
    # forest used by the default run config
    return px.ForestHyperparams(mtry=5)


@pytest.fixture(scope="session")
def dataset10k(default_params, default_solver):
    return px.generate(10000, 5, 20, default_params, default_solver, seed=0)


@pytest.fixture(scope="session")
def pipeline_split(dataset10k):
    return px.split(dataset10k, 0.2, seed=mix64("split", 0))


@pytest.fixture(scope="session")
def clean_model(pipeline_split, run_forest):
    return px.train(pipeline_split.train, run_forest)


@pytest.fixture(scope="session")
def small_ds(default_params, default_solver):
    # 4 agents on a 12-grid: cheap rows for unit tests
    return px.generate(500, 4, 12, default_params, default_solver, seed=11)


def random_instance(rng, n_agents=4, grid=12):
    pos = rng.integers(0, grid, size=(n_agents, 2)).astype(np.float64)
    return px.SwarmInstance(pos, ((grid - 1) / 2.0, (grid - 1) / 2.0), grid)
