"""Task catalogs, user profiles and the coverage value algebra.

Task sets are stored as integer bitmasks (bit ``k`` set means task ``k`` is
covered) and valued through lookup tables built once per catalog, so every
marginal-value query in the mechanisms is a handful of table lookups.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "InstanceError",
    "UnknownUserError",
    "TaskCatalog",
    "UserProfile",
    "Instance",
    "AuctionOutcome",
    "coverage_value",
    "marginal_value",
    "platform_utility",
    "marginal_utility",
    "sigma",
    "load_instance",
    "dump_instance",
]

# catalogs up to this many tasks get a single full lookup table
_FULL_TABLE_MAX_TASKS = 16
_CHUNK_BITS = 8


class InstanceError(ValueError):
    """Malformed auction instance; the message names the offending field."""


class UnknownUserError(InstanceError):
    """A user id that is not part of the instance."""


def _bits_table(values: np.ndarray) -> list[int]:
    width = len(values)
    codes = np.arange(1 << width, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(width, dtype=np.int64)) & 1
    return (bits @ values).tolist()


@dataclass(frozen=True)
class TaskCatalog:
    """Task values indexed by task id ``0..m-1``."""

    values: tuple[int, ...]

    def __post_init__(self):
        values = tuple(self.values)
        for k, value in enumerate(values):
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InstanceError(f"tasks[{k}].value must be an integer, got {value!r}")
            if value < 0:
                raise InstanceError(f"tasks[{k}].value must be >= 0, got {value}")
        object.__setattr__(self, "values", tuple(int(v) for v in values))

    @property
    def m(self) -> int:
        return len(self.values)

    @cached_property
    def _tables(self) -> list[list[int]]:
        vals = np.asarray(self.values, dtype=np.int64)
        if self.m <= _FULL_TABLE_MAX_TASKS:
            return [_bits_table(vals)]
        return [
            _bits_table(vals[start:start + _CHUNK_BITS])
            for start in range(0, self.m, _CHUNK_BITS)
        ]

    def value_of_mask(self, mask: int) -> int:
        """Additive value of the task set encoded by ``mask``."""
        tables = self._tables
        if len(tables) == 1:
            return tables[0][mask]
        raw = mask.to_bytes(len(tables), "little")
        return sum(table[byte] for table, byte in zip(tables, raw))

    def mask_of(self, task_ids: Iterable[int]) -> int:
        mask = 0
        for t in task_ids:
            mask |= 1 << t
        return mask


@dataclass(frozen=True)
class UserProfile:
    """One user's task subset and bid."""

    user_id: int
    tasks: frozenset[int]
    bid: int

    def __post_init__(self):
        object.__setattr__(self, "tasks", frozenset(int(t) for t in self.tasks))
        if isinstance(self.user_id, bool) or not isinstance(self.user_id, (int, np.integer)) or self.user_id < 1:
            raise InstanceError(f"user id must be a positive integer, got {self.user_id!r}")
        object.__setattr__(self, "user_id", int(self.user_id))
        if isinstance(self.bid, bool) or not isinstance(self.bid, (int, np.integer)):
            raise InstanceError(f"users[{self.user_id}].bid must be an integer, got {self.bid!r}")
        if self.bid <= 0:
            raise InstanceError(f"users[{self.user_id}].bid must be > 0, got {self.bid}")
        if not self.tasks:
            raise InstanceError(f"users[{self.user_id}].tasks must be nonempty")
        object.__setattr__(self, "bid", int(self.bid))


class Instance:
    """A task catalog plus the user profiles bidding on it.

    Users keep their ids when an instance is restricted to a subset (the
    online observation phase relies on that), so only uniqueness is checked
    here; contiguity of ids is checked when loading from JSON.
    """

    def __init__(self, catalog: TaskCatalog, users: Sequence[UserProfile]):
        self.catalog = catalog
        self.users = tuple(sorted(users, key=lambda u: u.user_id))
        self._profile: dict[int, UserProfile] = {}
        self._mask: dict[int, int] = {}
        for u in self.users:
            if u.user_id in self._profile:
                raise InstanceError(f"users: duplicate id {u.user_id}")
            bad = [t for t in u.tasks if not 0 <= t < catalog.m]
            if bad:
                raise InstanceError(f"users[{u.user_id}].tasks: unknown task id {min(bad)}")
            self._profile[u.user_id] = u
            self._mask[u.user_id] = catalog.mask_of(u.tasks)
        self.user_ids: tuple[int, ...] = tuple(self._profile)

    @classmethod
    def from_lists(
        cls,
        task_values: Sequence[int],
        user_tasks: Sequence[Iterable[int]],
        bids: Sequence[int],
    ) -> "Instance":
        """Build an instance with users numbered ``1..n`` in list order."""
        if len(user_tasks) != len(bids):
            raise InstanceError("users: task-list and bid counts differ")
        catalog = TaskCatalog(tuple(task_values))
        users = [
            UserProfile(i + 1, frozenset(tasks), bid)
            for i, (tasks, bid) in enumerate(zip(user_tasks, bids))
        ]
        return cls(catalog, users)

    @property
    def n(self) -> int:
        return len(self.users)

    @property
    def m(self) -> int:
        return self.catalog.m

    def __contains__(self, user_id) -> bool:
        return user_id in self._profile

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return self.catalog == other.catalog and self.users == other.users

    def __hash__(self):
        return hash((self.catalog, self.users))

    def __repr__(self) -> str:
        return f"Instance(n={self.n}, m={self.m})"

    def profile(self, user_id: int) -> UserProfile:
        try:
            return self._profile[user_id]
        except KeyError:
            raise UnknownUserError(f"unknown user id {user_id!r}") from None

    def bid(self, user_id: int) -> int:
        return self.profile(user_id).bid

    def task_mask(self, user_id: int) -> int:
        try:
            return self._mask[user_id]
        except KeyError:
            raise UnknownUserError(f"unknown user id {user_id!r}") from None

    def covered(self, users: Iterable[int]) -> int:
        mask = 0
        for i in users:
            mask |= self.task_mask(i)
        return mask

    def chi(self, mask: int) -> int:
        """Value of a task set; the single hook every valuation goes through."""
        return self.catalog.value_of_mask(mask)

    def marginal_on(self, user_id: int, covered_mask: int) -> int:
        """``v_i(S)`` given the precomputed coverage mask of ``S``."""
        return self.chi(self.task_mask(user_id) & ~covered_mask)

    def user_value(self, user_id: int) -> int:
        return self.chi(self.task_mask(user_id))

    def restrict(self, user_ids: Iterable[int]) -> "Instance":
        """Sub-instance with the same catalog and only the given users."""
        return Instance(self.catalog, [self.profile(i) for i in user_ids])

    def with_bid(self, user_id: int, bid: int) -> "Instance":
        """Copy of the instance where one user re-bids."""
        old = self.profile(user_id)
        users = [u for u in self.users if u.user_id != user_id]
        users.append(UserProfile(user_id, old.tasks, bid))
        return Instance(self.catalog, users)

    def to_dict(self) -> dict:
        return {
            "tasks": [{"id": k, "value": v} for k, v in enumerate(self.catalog.values)],
            "users": [
                {"id": u.user_id, "tasks": sorted(u.tasks), "bid": u.bid}
                for u in self.users
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Instance":
        """Parse the JSON instance layout, insisting on contiguous ids."""
        if not isinstance(data, Mapping):
            raise InstanceError("instance must be a JSON object")
        for key in ("tasks", "users"):
            if key not in data:
                raise InstanceError(f"missing field '{key}'")
            if not isinstance(data[key], list):
                raise InstanceError(f"field '{key}' must be a list")
        values = {}
        for pos, task in enumerate(data["tasks"]):
            for key in ("id", "value"):
                if not isinstance(task, Mapping) or key not in task:
                    raise InstanceError(f"tasks[{pos}] missing field '{key}'")
            if task["id"] in values:
                raise InstanceError(f"tasks[{pos}].id duplicates {task['id']}")
            values[task["id"]] = task["value"]
        if sorted(values) != list(range(len(values))):
            raise InstanceError("tasks.id must be contiguous from 0")
        catalog = TaskCatalog(tuple(values[k] for k in range(len(values))))

        users = []
        for pos, user in enumerate(data["users"]):
            for key in ("id", "tasks", "bid"):
                if not isinstance(user, Mapping) or key not in user:
                    raise InstanceError(f"users[{pos}] missing field '{key}'")
            if not isinstance(user["tasks"], list):
                raise InstanceError(f"users[{pos}].tasks must be a list")
            users.append(UserProfile(user["id"], frozenset(user["tasks"]), user["bid"]))
        ids = sorted(u.user_id for u in users)
        if ids != list(range(1, len(ids) + 1)):
            raise InstanceError("users.id must be unique and contiguous from 1")
        return cls(catalog, users)


@dataclass(frozen=True)
class AuctionOutcome:
    """Winners, their payments and the resulting platform utility."""

    winners: frozenset[int]
    payments: Mapping[int, int] = field(default_factory=dict)
    utility: int = 0

    def payment(self, user_id: int) -> int:
        return self.payments.get(user_id, 0)

    def to_dict(self) -> dict:
        return {
            "winners": sorted(self.winners),
            "payments": {str(i): self.payments[i] for i in sorted(self.payments)},
            "utility": self.utility,
        }

    @classmethod
    def build(cls, instance: Instance, winners: Iterable[int], payments: Mapping[int, int]):
        winners = frozenset(winners)
        paid = {i: int(payments[i]) for i in sorted(winners)}
        return cls(winners, paid, platform_utility(instance, winners, paid))


def coverage_value(instance: Instance, users: Iterable[int]) -> int:
    """Value of the union of the users' task sets."""
    return instance.chi(instance.covered(users))


def marginal_value(instance: Instance, i: int, S: Iterable[int]) -> int:
    S = set(S)
    instance.task_mask(i)
    if i in S:
        return 0
    return instance.marginal_on(i, instance.covered(S))


def platform_utility(instance: Instance, winners: Iterable[int], payments: Mapping[int, int]) -> int:
    winners = set(winners)
    return coverage_value(instance, winners) - sum(payments[i] for i in winners)


def marginal_utility(instance: Instance, i: int, S: Iterable[int], payment: int) -> int:
    return marginal_value(instance, i, S) - payment


def sigma(instance: Instance, i: int, T: Iterable[int]) -> int:
    """Marginal value of ``i`` against the rest of ``T``, minus its bid."""
    rest = set(T) - {i}
    return marginal_value(instance, i, rest) - instance.bid(i)


def load_instance(path) -> Instance:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return Instance.from_dict(data)


def dump_instance(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), indent=1) + "\n", encoding="utf-8")
