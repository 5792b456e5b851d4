import numpy as np
import pytest

from recineq.types import GaugeSet, RatingMatrix

nan = np.nan


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy():
    """Three training users, two test users, five items, gauge {1, 2, 3}.

    Gauge correlations against test user 100 ([2, 4, 6]): user 0 -> 1.0,
    user 1 -> -1.0, user 2 -> 0.5.  Against test user 101 ([6, 4, 2]) the
    signs flip, leaving only user 1 at 1.0.
    """
    train = RatingMatrix(
        np.array([
            [1.0, 2.0, 3.0, 5.0, -1.0],
            [3.0, 2.0, 1.0, -4.0, 6.0],
            [1.0, 3.0, 2.0, 2.0, nan],
        ]),
        user_ids=[0, 1, 2],
    )
    test = RatingMatrix(
        np.array([
            [2.0, 4.0, 6.0, 1.0, nan],
            [6.0, 4.0, 2.0, nan, 3.0],
        ]),
        user_ids=[100, 101],
    )
    return train, test, GaugeSet((1, 2, 3))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
