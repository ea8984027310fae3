import itertools

import pytest
from hypothesis import strategies as st

from smartcrowd.fixtures import walkthrough_instance
from smartcrowd.model import Instance


@pytest.fixture
def fix():
    return walkthrough_instance()


def single_user(value=10, bid=4):
    return Instance.from_lists([value], [[0]], [bid])


def brute_value(values, user_tasks, users):
    """Union value by plain set arithmetic, independent of the bitmask tables."""
    covered = set()
    for i in users:
        covered |= set(user_tasks[i - 1])
    return sum(values[t] for t in covered)


def brute_first_best(instance):
    best = 0
    ids = instance.user_ids
    for r in range(1, len(ids) + 1):
        for W in itertools.combinations(ids, r):
            covered = set().union(*(instance.profile(i).tasks for i in W))
            best = max(best, sum(instance.catalog.values[t] for t in covered)
                       - sum(instance.bid(i) for i in W))
    return best


@st.composite
def instances(draw, max_users=6, max_tasks=6, max_value=20, max_bid=30):
    m = draw(st.integers(1, max_tasks))
    n = draw(st.integers(1, max_users))
    values = draw(st.lists(st.integers(0, max_value), min_size=m, max_size=m))
    tasks = draw(st.lists(st.sets(st.integers(0, m - 1), min_size=1), min_size=n, max_size=n))
    bids = draw(st.lists(st.integers(1, max_bid), min_size=n, max_size=n))
    return Instance.from_lists(values, [sorted(t) for t in tasks], bids)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
