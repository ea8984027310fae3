"""M-Sensing baseline: the greedy screening set wins and every winner is paid
its entry payment."""
from __future__ import annotations

from .model import AuctionOutcome, Instance
from .smart import screen_users, user_entry_payment

__all__ = ["run_msensing"]


def run_msensing(instance: Instance) -> AuctionOutcome:
    winners = screen_users(instance).order
    payments = {i: user_entry_payment(instance, i) for i in winners}
    return AuctionOutcome.build(instance, winners, payments)
