import numpy as np
import pytest
from hypothesis import settings

from aicn.data import synth_logistic
from aicn.objectives import LogisticObjective, LowerBoundObjective, QuadraticObjective

settings.register_profile("aicn", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("aicn")


def random_spd(rng, d, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eig = np.geomspace(1.0, cond, d)
    return (Q * eig) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth_obj():
    return LogisticObjective(synth_logistic(200, 20, seed=1), mu=1e-3)


@pytest.fixture(scope="session")
def small_logistic():
    return LogisticObjective(synth_logistic(5, 3, seed=3), mu=1e-3)


@pytest.fixture(scope="session")
def lower_bound_10():
    return LowerBoundObjective(10, mu=1e-3)


@pytest.fixture
def quadratic(rng):
    return QuadraticObjective(random_spd(rng, 4, cond=50.0), rng.standard_normal(4))


# one line per acceptance criterion, echoed in the terminal summary so the
# verdicts survive pytest's output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
