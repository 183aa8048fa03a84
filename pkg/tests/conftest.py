import numpy as np
import pytest
from hypothesis import settings

from lincom_ci import build_problem, experiment
from lincom_ci.coverage import ScenarioSpec

# Deterministic, time-limit-free property testing so the suite is reproducible.
settings.register_profile("repo", deadline=None, derandomize=True, max_examples=30)
settings.load_profile("repo")


@pytest.fixture
def binomial10():
    return build_problem([experiment(10, (1, 0))])


@pytest.fixture
def scenario_c5():
    return ScenarioSpec(id="C", n=5).problem()


@pytest.fixture
def scenario_a5():
    return ScenarioSpec(id="A", n=5).problem()


@pytest.fixture
def scenario_d3():
    return ScenarioSpec(id="D", n=3).problem()


def random_small_problem(rng: np.random.Generator, max_lattice: int = 50):
    """Random problem with a small lattice, for property sweeps."""
    while True:
        k = int(rng.integers(1, 3))
        specs = []
        for _ in range(k):
            m = int(rng.integers(2, 4))
            n = int(rng.integers(2, 7))
            weights = tuple(int(rng.integers(-3, 4)) for _ in range(m))
            specs.append(experiment(n, weights))
        problem = build_problem(specs)
        from lincom_ci import y_lattice

        if y_lattice(problem).count <= max_lattice:
            return problem
