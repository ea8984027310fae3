"""Empirical checks of the auction properties.

Every check returns a list of :class:`Violation` records (empty on success).
``run_battery`` draws seeded random instances, runs all checks on each, and
aggregates the results in instance order, so a report is a pure function of
its arguments and every violation can be replayed from its instance seed.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .estimators import MSensing, OnlineSMART, SMART
from .model import AuctionOutcome, Instance
from .online import OnlineConfig, simulate_online
from .seeding import derive_seed

__all__ = [
    "FIRST_BEST_MAX_USERS",
    "TruthfulnessProbe",
    "Violation",
    "PropertyReport",
    "first_best_bound",
    "check_rationality_profitability",
    "check_truthfulness",
    "check_dominance",
    "check_first_best",
    "check_online_structure",
    "battery_instance",
    "check_instance_properties",
    "run_battery",
]

FIRST_BEST_MAX_USERS = 20
BATTERY_FIRST_BEST_MAX_USERS = 12
BATTERY_TASK_VALUES = (0, 20)
BATTERY_BIDS = (1, 40)
BATTERY_OBSERVE_FRACTIONS = (0.25, 1 / 3, 0.5)

Mechanism = Callable[[Instance], AuctionOutcome]


@dataclass(frozen=True)
class TruthfulnessProbe:
    target: int
    cost: int
    bids: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bids", tuple(int(b) for b in self.bids))
        if self.cost <= 0:
            raise ValueError("probe cost must be positive")
        if any(b <= 0 for b in self.bids):
            raise ValueError("probe bids must be positive")


@dataclass(frozen=True)
class Violation:
    property: str
    mechanism: str
    seed: Optional[int]
    detail: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class PropertyReport:
    instances: int = 0
    violations: list[Violation] = field(default_factory=list)
    checks: Counter = field(default_factory=Counter)
    settings: dict = field(default_factory=dict)

    def add(self, violations: Iterable[Violation], checked: Iterable[str] = ()):
        self.violations.extend(violations)
        self.checks.update(checked)

    def counts(self) -> dict[str, int]:
        """Violations per ``property/mechanism``."""
        return dict(sorted(Counter(f"{v.property}/{v.mechanism}" for v in self.violations).items()))

    def violated(self, prop: str, mechanism: Optional[str] = None) -> list[Violation]:
        return [
            v for v in self.violations
            if v.property == prop and (mechanism is None or v.mechanism == mechanism)
        ]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_jsonl(self) -> str:
        return "".join(v.to_json() + "\n" for v in self.violations)

    def summary(self) -> dict:
        return {
            "instances": self.instances,
            "settings": self.settings,
            "checks": dict(sorted(self.checks.items())),
            "violations": self.counts(),
        }


def _runner(mechanism) -> tuple[str, Mechanism]:
    if hasattr(mechanism, "run"):
        return getattr(mechanism, "name", type(mechanism).__name__), mechanism.run
    return getattr(mechanism, "__name__", "mechanism"), mechanism


def first_best_bound(instance: Instance) -> int:
    """Max over all user subsets of covered value minus total bids.

    Exhaustive; refuses instances with more than ``FIRST_BEST_MAX_USERS`` users.
    """
    n = instance.n
    if n > FIRST_BEST_MAX_USERS:
        raise ValueError(f"first_best_bound enumerates 2**n subsets; n={n} exceeds {FIRST_BEST_MAX_USERS}")
    incidence = np.zeros((n, instance.m), dtype=bool)
    for row, u in enumerate(instance.users):
        incidence[row, list(u.tasks)] = True
    values = np.asarray(instance.catalog.values, dtype=np.int64)
    bids = np.array([u.bid for u in instance.users], dtype=np.int64)
    # subsets grow one user at a time: rows [2**b, 2**(b+1)) add user b to rows [0, 2**b)
    cover = np.zeros((1 << n, instance.m), dtype=bool)
    cost = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        half = 1 << b
        cover[half:2 * half] = cover[:half] | incidence[b]
        cost[half:2 * half] = cost[:half] + bids[b]
    return int((cover @ values - cost).max())


def check_rationality_profitability(mechanism, instance: Instance, seed=None,
                                    outcome: Optional[AuctionOutcome] = None) -> list[Violation]:
    name, run = _runner(mechanism)
    outcome = run(instance) if outcome is None else outcome
    found = []
    for i in sorted(outcome.winners):
        if outcome.payments[i] < instance.bid(i):
            found.append(Violation("individual_rationality", name, seed,
                                   f"user {i} paid {outcome.payments[i]} below bid {instance.bid(i)}"))
    if outcome.utility < 0:
        found.append(Violation("profitability", name, seed, f"utility {outcome.utility}"))
    return found


def check_truthfulness(mechanism, instance: Instance, probe: TruthfulnessProbe, seed=None,
                       outcome: Optional[AuctionOutcome] = None) -> list[Violation]:
    """Re-run the mechanism with only the target's bid changed.

    Checks that lower bids keep the target winning, that bids above its
    payment make it lose, and that bidding its cost earns at least as much
    personal utility as any probe bid.  Bids equal to the payment are refused.
    """
    name, run = _runner(mechanism)
    outcome = run(instance) if outcome is None else outcome
    i = probe.target
    if i not in outcome.winners:
        raise ValueError(f"probe target {i} does not win under its reference bid")
    bid, pay = instance.bid(i), outcome.payments[i]
    if pay in probe.bids:
        raise ValueError(f"probe bid {pay} equals the reference payment; boundary bids are excluded")

    def personal_utility(b: int) -> int:
        result = outcome if b == bid else run(instance.with_bid(i, b))
        return result.payments[i] - probe.cost if i in result.winners else 0

    found = []
    honest = personal_utility(probe.cost)
    for b in probe.bids:
        result = run(instance.with_bid(i, b))
        wins = i in result.winners
        if b < bid and not wins:
            found.append(Violation("monotonicity", name, seed,
                                   f"user {i} wins at bid {bid} but loses at {b}"))
        if b > pay and wins:
            found.append(Violation("critical_payment", name, seed,
                                   f"user {i} paid {pay} at bid {bid} still wins at {b} "
                                   f"(paid {result.payments[i]})"))
        gained = result.payments[i] - probe.cost if wins else 0
        if gained > honest:
            found.append(Violation("truthful_dominance", name, seed,
                                   f"user {i} with cost {probe.cost} earns {gained} bidding {b} "
                                   f"vs {honest} bidding truthfully"))
    return found


def check_dominance(instance: Instance, seed=None, smart: Optional[AuctionOutcome] = None,
                    msensing: Optional[AuctionOutcome] = None) -> list[Violation]:
    smart = SMART().run(instance) if smart is None else smart
    msensing = MSensing().run(instance) if msensing is None else msensing
    if smart.utility < msensing.utility:
        return [Violation("dominance", "smart", seed,
                          f"SMART utility {smart.utility} < M-Sensing utility {msensing.utility}")]
    return []


def check_first_best(instance: Instance, seed=None, smart: Optional[AuctionOutcome] = None) -> list[Violation]:
    smart = SMART().run(instance) if smart is None else smart
    bound = first_best_bound(instance)
    if smart.utility > bound:
        return [Violation("first_best_bound", "smart", seed,
                          f"SMART utility {smart.utility} exceeds first-best {bound}")]
    return []


def check_online_structure(instance: Instance, arrival_order: Sequence[int], config: OnlineConfig,
                           seed=None, rng: Optional[np.random.Generator] = None) -> list[Violation]:
    """Invariants of the streaming state along one run, plus a causality replay:
    re-bidding users that arrive after a cut must not change any earlier decision."""
    state = simulate_online(instance, arrival_order, config)
    found = []

    def fail(prop, detail):
        found.append(Violation(prop, "online", seed, detail))

    previous_utility = 0
    for step, rec in enumerate(state.log):
        if not rec.winners <= rec.reference:
            fail("online_winners_in_reference", f"arrival {step}: T not a subset of R")
        if len(rec.reference) > instance.m:
            fail("online_reference_size", f"arrival {step}: |R|={len(rec.reference)} > m={instance.m}")
        for j in sorted(rec.reference - rec.winners):
            if instance.marginal_on(j, instance.covered(rec.reference - {j})) < instance.bid(j):
                fail("online_reference_margin", f"arrival {step}: reference user {j} below its bid")
        if rec.utility < previous_utility:
            fail("online_utility_monotone", f"arrival {step}: utility fell {previous_utility} -> {rec.utility}")
        previous_utility = rec.utility

    if state.log:
        rng = np.random.default_rng(0) if rng is None else rng
        cut = int(rng.integers(0, len(state.log)))
        later = state.arrivals[state.cursor - len(state.log) + cut + 1:]
        altered = instance
        for j in later:
            value = instance.user_value(j)
            if value >= 2:
                altered = altered.with_bid(j, int(rng.integers(1, value)))
        replay = simulate_online(altered, arrival_order, config)
        if replay.log[:cut + 1] != state.log[:cut + 1]:
            fail("online_prefix_replay", f"decisions up to arrival {cut} changed after re-bidding later users")
    return found


def battery_instance(instance_seed: int, max_users: int, max_tasks: int):
    """Random battery instance plus its arrival order, observe fraction and
    truthfulness-probe stream, all drawn from ``instance_seed``."""
    rng = np.random.default_rng(instance_seed)
    n = int(rng.integers(1, max_users + 1))
    m = int(rng.integers(1, max_tasks + 1))
    values = rng.integers(BATTERY_TASK_VALUES[0], BATTERY_TASK_VALUES[1] + 1, size=m).tolist()
    tasks = [rng.choice(m, size=int(rng.integers(1, m + 1)), replace=False).tolist() for _ in range(n)]
    bids = rng.integers(BATTERY_BIDS[0], BATTERY_BIDS[1] + 1, size=n).tolist()
    instance = Instance.from_lists(values, tasks, bids)
    order = tuple(int(i) for i in rng.permutation(np.arange(1, n + 1)))
    fraction = BATTERY_OBSERVE_FRACTIONS[int(rng.integers(len(BATTERY_OBSERVE_FRACTIONS)))]
    return instance, order, fraction, rng


def _probe_for(instance: Instance, i: int, payment: int, rng: np.random.Generator) -> TruthfulnessProbe:
    bid = instance.bid(i)
    bids = {bid - 1, (bid + 1) // 2, payment + 1, payment + 1 + int(rng.integers(0, payment + 1))}
    if bid < (bid + payment) // 2 < payment:
        bids.add((bid + payment) // 2)
    bids = sorted(b for b in bids if b >= 1 and b != payment and b != bid)
    return TruthfulnessProbe(i, int(rng.integers(1, bid + 1)), tuple(bids))


def check_instance_properties(instance_seed: int, max_users: int, max_tasks: int):
    """Every battery check on one seeded instance; returns (violations, check names)."""
    instance, order, fraction, rng = battery_instance(instance_seed, max_users, max_tasks)
    config = OnlineConfig(fraction)
    mechanisms = [SMART(), MSensing(), OnlineSMART(fraction, arrival_order=order)]
    outcomes = {mech.name: mech.run(instance) for mech in mechanisms}
    found, checked = [], []
    for mech in mechanisms:
        outcome = outcomes[mech.name]
        found += check_rationality_profitability(mech, instance, instance_seed, outcome)
        checked += [f"individual_rationality/{mech.name}", f"profitability/{mech.name}"]
        for i in sorted(outcome.winners):
            probe = _probe_for(instance, i, outcome.payments[i], rng)
            found += check_truthfulness(mech, instance, probe, instance_seed, outcome)
            checked += [f"monotonicity/{mech.name}", f"critical_payment/{mech.name}",
                        f"truthful_dominance/{mech.name}"]
    found += check_dominance(instance, instance_seed, outcomes["smart"], outcomes["msensing"])
    checked.append("dominance/smart")
    if instance.n <= BATTERY_FIRST_BEST_MAX_USERS:
        found += check_first_best(instance, instance_seed, outcomes["smart"])
        checked.append("first_best_bound/smart")
    found += check_online_structure(instance, order, config, instance_seed, rng)
    checked.append("online_structure/online")
    return found, checked


def run_battery(seed: int, count: int, max_users: int = 10, max_tasks: int = 8) -> PropertyReport:
    if count < 0:
        raise ValueError("count must be >= 0")
    if max_users < 1 or max_tasks < 1:
        raise ValueError("size bounds must be >= 1")
    report = PropertyReport(settings={"seed": seed, "count": count,
                                      "max_users": max_users, "max_tasks": max_tasks})
    for index in range(count):
        found, checked = check_instance_properties(derive_seed(seed, 0, index), max_users, max_tasks)
        report.add(found, checked)
        report.instances += 1
    return report
