import random

import numpy as np
import pytest
from hypothesis import settings

from onetwo import hexlattice, model
from onetwo.model import Weights

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

WEIGHT_SETS = [Weights(1, 1, 1), Weights(1, 2, 3), Weights(9, 1, 1)]

# smallest admissible state spaces found for each box; (k, n) -> boundary mask
MIN_BOUNDARY = {
    (1, 1): 1058,
    (1, 2): 135202,
    (1, 3): 17305634,
    (1, 4): 2215120930,
    (2, 2): 134234274,
}
MIN_STATES = {(1, 1): 2, (1, 2): 22, (1, 3): 198, (1, 4): 1702, (2, 2): 1170}


def box_instance(k, n):
    g = hexlattice.build_box(k, n)
    return g, MIN_BOUNDARY[(k, n)]


def seeded_instance(k, n, seed):
    g = hexlattice.build_box(k, n)
    return g, model.random_boundary(g, random.Random(seed))


@pytest.fixture(scope="session")
def h1():
    g = hexlattice.build_box(1, 1)
    return g, model.alternating_boundary(g)


@pytest.fixture(scope="session")
def box12():
    return box_instance(1, 2)


@pytest.fixture(scope="session")
def box13():
    return box_instance(1, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """record(number, passed, detail) for the acceptance summary."""
    store = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(num, passed, detail=""):
        store[num] = (bool(passed), detail)
        print(f"criterion {num:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(ACCEPTANCE, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(store):
        passed, detail = store[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
