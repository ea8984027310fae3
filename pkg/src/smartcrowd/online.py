"""ONLINE-SMART: users arrive one by one and are accepted or rejected on the
spot, against a reference set seeded by running SMART on an observed prefix.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .model import AuctionOutcome, Instance, InstanceError
from .smart import run_smart

__all__ = [
    "OnlineConfig",
    "ArrivalRecord",
    "OnlineState",
    "arrival_sequence",
    "observe",
    "add_user",
    "try_to_replace",
    "remove_bad_reference_users",
    "process_arrival",
    "simulate_online",
    "run_online",
]


@dataclass(frozen=True)
class OnlineConfig:
    observe_fraction: float = 1 / 3

    def __post_init__(self):
        if not 0 < self.observe_fraction < 1:
            raise ValueError(f"observe_fraction must lie in (0, 1), got {self.observe_fraction}")

    def observed_count(self, n: int) -> int:
        # exact rational floor so 0.29 * 100 is 29, not 28
        return int(n * Fraction(self.observe_fraction).limit_denominator(1_000_000))


@dataclass(frozen=True)
class ArrivalRecord:
    user: int
    decision: str  # "added", "replaced" or "rejected"
    payment: int
    displaced: Optional[int]
    removed: tuple[int, ...]
    reference: frozenset[int]
    winners: frozenset[int]
    utility: int


@dataclass(frozen=True)
class OnlineState:
    reference: frozenset[int]
    winners: frozenset[int]
    payments: Mapping[int, int]
    cursor: int
    arrivals: tuple[int, ...]
    observed: tuple[int, ...] = ()
    log: tuple[ArrivalRecord, ...] = field(default=(), repr=False)

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.arrivals)


def arrival_sequence(instance: Instance, arrival_order: Sequence[int]) -> tuple[int, ...]:
    order = tuple(arrival_order)
    if sorted(order) != sorted(instance.user_ids):
        raise InstanceError("arrival_order must be a permutation of the instance's user ids")
    return order


def observe(instance: Instance, arrival_order: Sequence[int], config: OnlineConfig) -> OnlineState:
    arrivals = arrival_sequence(instance, arrival_order)
    k = config.observed_count(len(arrivals))
    observed = arrivals[:k]
    reference = run_smart(instance.restrict(observed)).winners if observed else frozenset()
    return OnlineState(frozenset(reference), frozenset(), {}, k, arrivals, observed)


def _utility(instance: Instance, winners, payments) -> int:
    return instance.chi(instance.covered(winners)) - sum(payments[i] for i in winners)


def add_user(state: OnlineState, instance: Instance, i: int) -> OnlineState:
    R = state.reference
    value = instance.marginal_on(i, instance.covered(R))
    if len(R) >= instance.m or value - instance.bid(i) <= 0:
        raise ValueError(f"user {i} cannot be added to the reference set")
    payments = dict(state.payments)
    payments[i] = value
    return replace(state, reference=R | {i}, winners=state.winners | {i}, payments=payments)


def _swap_gain(instance: Instance, R: frozenset, value_R: int, k: int, i: int) -> int:
    swapped = instance.covered(R - {k}) | instance.task_mask(i)
    return instance.chi(swapped) - value_R + instance.bid(k)


def try_to_replace(state: OnlineState, instance: Instance, i: int) -> OnlineState:
    """Swap ``i`` for the reference-only user whose exit gains the most; pay
    ``i`` the swap gain, which exceeds its bid whenever the swap happens."""
    R = state.reference
    value_R = instance.chi(instance.covered(R))
    best, best_gain = None, 0
    for k in sorted(R - state.winners):
        gain = _swap_gain(instance, R, value_R, k, i)
        if best is None or gain > best_gain:
            best, best_gain = k, gain
    if best is None or best_gain - instance.bid(i) <= 0:
        return state
    payments = dict(state.payments)
    payments[i] = best_gain
    return replace(
        state,
        reference=(R - {best}) | {i},
        winners=state.winners | {i},
        payments=payments,
    )


def remove_bad_reference_users(state: OnlineState, instance: Instance) -> OnlineState:
    R = set(state.reference)
    for j in sorted(R - state.winners):
        if instance.marginal_on(j, instance.covered(R - {j})) < instance.bid(j):
            R.discard(j)
    if len(R) == len(state.reference):
        return state
    return replace(state, reference=frozenset(R))


def process_arrival(state: OnlineState, instance: Instance) -> OnlineState:
    """Decide the user at the cursor, then clean up the reference set."""
    i = state.arrivals[state.cursor]
    R = state.reference
    if len(R) < instance.m and instance.marginal_on(i, instance.covered(R)) - instance.bid(i) > 0:
        new = add_user(state, instance, i)
        decision = "added"
    else:
        new = try_to_replace(state, instance, i)
        decision = "replaced" if i in new.winners else "rejected"
    displaced = next(iter(R - new.reference), None) if decision == "replaced" else None
    before = new.reference
    new = remove_bad_reference_users(new, instance)
    record = ArrivalRecord(
        user=i,
        decision=decision,
        payment=new.payments.get(i, 0),
        displaced=displaced,
        removed=tuple(sorted(before - new.reference)),
        reference=new.reference,
        winners=new.winners,
        utility=_utility(instance, new.winners, new.payments),
    )
    return replace(new, cursor=state.cursor + 1, log=state.log + (record,))


def simulate_online(instance: Instance, arrival_order: Sequence[int], config: OnlineConfig) -> OnlineState:
    """Run the full mechanism and return the final state with its arrival log."""
    state = observe(instance, arrival_order, config)
    while not state.done and len(state.winners) < instance.m:
        state = process_arrival(state, instance)
    return state


def run_online(instance: Instance, arrival_order: Sequence[int], config: OnlineConfig) -> AuctionOutcome:
    state = simulate_online(instance, arrival_order, config)
    return AuctionOutcome.build(instance, state.winners, state.payments)
