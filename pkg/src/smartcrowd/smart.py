"""Offline SMART: greedy screening, replacement-based winner selection with
critical payments, and a final sweep that drops unprofitable winners.

Critical values that may be unbounded (``gamma`` from the next-best-user
search, ``beta`` for users never screened in) are ``int | None`` with
``None`` meaning infinite.  A finite ``gamma`` can be negative.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .model import AuctionOutcome, Instance, InstanceError

__all__ = [
    "ScreeningResult",
    "SelectionStep",
    "screen_users",
    "next_best_user",
    "user_entry_payment",
    "replace_user",
    "winner_selection",
    "remove_bad_users",
    "run_smart",
]

Gamma = Optional[int]
Beta = Optional[int]


@dataclass(frozen=True)
class ScreeningResult:
    order: tuple[int, ...]
    rounds: dict[int, int]

    def __iter__(self):
        return iter(self.order)

    def __len__(self):
        return len(self.order)


@dataclass(frozen=True)
class SelectionStep:
    """What phase 2 decided for one screened user."""

    user: int
    candidate: Optional[int]
    gamma: Gamma
    sigma: int
    beta: Beta
    rule: str
    paid_user: Optional[int] = None
    payment: Optional[int] = None
    replacement_gamma: Gamma = None


def _best(instance: Instance, candidates: Iterable[int], covered: int) -> tuple[Optional[int], int]:
    """Candidate maximising marginal value minus bid; ties go to the lowest id."""
    best, best_margin = None, 0
    for k in sorted(candidates):
        margin = instance.marginal_on(k, covered) - instance.bid(k)
        if best is None or margin > best_margin:
            best, best_margin = k, margin
    return best, best_margin


def screen_users(instance: Instance) -> ScreeningResult:
    order: list[int] = []
    remaining = set(instance.user_ids)
    covered = 0
    while remaining:
        i, margin = _best(instance, remaining, covered)
        if margin <= 0:
            break
        order.append(i)
        remaining.discard(i)
        covered |= instance.task_mask(i)
    return ScreeningResult(tuple(order), {i: r for r, i in enumerate(order)})


def next_best_user(instance: Instance, i: int, T: Iterable[int], betas: Optional[dict] = None):
    """Best outside replacement for ``i`` in ``T`` and the bid ``gamma`` above
    which swapping it in pays off.

    Returns ``(None, None)`` when no outsider has a positive margin.  When
    ``betas`` is given, the chosen candidate's entry is reset to infinite.
    """
    T = set(T)
    if i not in T:
        raise InstanceError(f"user {i} is not in the winner set")
    rest = T - {i}
    covered = instance.covered(rest)
    j, margin = _best(instance, set(instance.user_ids) - T, covered)
    if j is None or margin <= 0:
        return None, None
    if betas is not None:
        betas[j] = None
    gamma = instance.marginal_on(i, covered) - instance.marginal_on(j, covered) + instance.bid(j)
    return j, gamma


def user_entry_payment(instance: Instance, i: int) -> int:
    """Highest bid with which ``i`` would still be picked at some screening round.

    Replays the greedy screening without ``i``.  Stops once ``i`` no longer
    clears its own bid, or once the replay itself would stop (no competitor
    left with positive margin); in the latter case ``i`` could have entered
    with any bid below its remaining marginal value.
    """
    bid_i = instance.bid(i)
    mask_i = instance.task_mask(i)
    remaining = set(instance.user_ids) - {i}
    covered = 0
    beta = 0
    while True:
        v_i = instance.chi(mask_i & ~covered)
        if v_i <= bid_i:
            return beta
        j, margin = _best(instance, remaining, covered)
        if j is None or margin <= 0:
            return max(beta, v_i)
        beta = max(beta, v_i - instance.marginal_on(j, covered) + instance.bid(j))
        remaining.discard(j)
        covered |= instance.task_mask(j)


def replace_user(instance: Instance, T: Iterable[int], i: int, j: int, betas: Optional[dict] = None):
    """Swap ``j`` in for ``i`` and price ``j`` at min(gamma_j, v_j(T' - j))."""
    T = set(T)
    if i not in T:
        raise InstanceError(f"user {i} is not in the winner set")
    if j in T:
        raise InstanceError(f"user {j} is already in the winner set")
    instance.task_mask(j)
    T_new = (T - {i}) | {j}
    _, gamma_j = next_best_user(instance, j, T_new, betas)
    value_j = instance.marginal_on(j, instance.covered(T_new - {j}))
    if gamma_j is not None and gamma_j < value_j:
        return T_new, gamma_j, gamma_j
    return T_new, value_j, gamma_j


def winner_selection(instance: Instance, screening: ScreeningResult, trace: Optional[list] = None):
    """Phase 2. Walks the screened users in entry order and keeps, replaces or
    drops each, fixing payments as it goes.

    Returns ``(T, payments)``; ``trace`` (a list) collects one
    :class:`SelectionStep` per screened user.
    """
    T = set(screening.order)
    payments: dict[int, int] = {}
    betas: dict[int, Beta] = {}
    for i in screening.order:
        j, gamma = next_best_user(instance, i, T, betas)
        sig = instance.marginal_on(i, instance.covered(T - {i})) - instance.bid(i)
        beta = user_entry_payment(instance, i)
        betas[i] = beta
        bid = instance.bid(i)
        paid_user, replacement_gamma = i, None
        if sig > 0:
            if gamma is not None and gamma >= bid and gamma <= beta:
                rule, pay = "1.1", gamma
            elif gamma is not None and gamma < bid and gamma <= beta:
                rule, paid_user = "1.2", j
                T, pay, replacement_gamma = replace_user(instance, T, i, j, betas)
            else:
                rule, pay = "1.3", min(sig + bid, beta)
        elif gamma is not None:
            rule, paid_user = "2.replace", j
            T, pay, replacement_gamma = replace_user(instance, T, i, j, betas)
        else:
            rule, paid_user, pay = "2.drop", None, None
            T.discard(i)
        if paid_user is not None:
            payments[paid_user] = pay
        if trace is not None:
            trace.append(SelectionStep(i, j, gamma, sig, beta, rule, paid_user, pay, replacement_gamma))
    return T, {w: payments[w] for w in sorted(T)}


def remove_bad_users(instance: Instance, T: Iterable[int], payments: Mapping[int, int]):
    """Phase 3: drop winners whose marginal value no longer beats their payment."""
    T = set(T)
    payments = dict(payments)
    for i in sorted(T):
        if instance.marginal_on(i, instance.covered(T - {i})) - payments[i] <= 0:
            T.discard(i)
            payments.pop(i)
    return T, {w: payments[w] for w in sorted(T)}


def run_smart(instance: Instance, trace: Optional[list] = None) -> AuctionOutcome:
    screening = screen_users(instance)
    T, payments = winner_selection(instance, screening, trace)
    T, payments = remove_bad_users(instance, T, payments)
    return AuctionOutcome.build(instance, T, payments)
