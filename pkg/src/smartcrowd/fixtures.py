"""The five-user worked example used throughout the tests and the CLI.

Each of the six tasks is one region of the users' overlap diagram:

    task 0 (6)   shared by users 1, 2, 3
    task 1 (10)  users 1, 2
    task 2 (8)   users 1, 3
    task 3 (9)   users 1, 5
    task 4 (8)   user 2 only
    task 5 (9)   users 3, 4
"""
from .model import Instance

WALKTHROUGH_TASK_VALUES = (6, 10, 8, 9, 8, 9)
WALKTHROUGH_USER_TASKS = ({0, 1, 2, 3}, {0, 1, 4}, {0, 2, 5}, {5}, {3})
WALKTHROUGH_BIDS = (8, 6, 6, 7, 2)


def walkthrough_instance() -> Instance:
    return Instance.from_lists(WALKTHROUGH_TASK_VALUES, WALKTHROUGH_USER_TASKS, WALKTHROUGH_BIDS)
