"""Truthful reverse auctions for smartphone crowd-sourcing: offline SMART,
the M-Sensing baseline and the streaming ONLINE-SMART mechanism."""
from .estimators import MSensing, OnlineSMART, SMART, random_arrival_order
from .model import (
    AuctionOutcome,
    Instance,
    InstanceError,
    TaskCatalog,
    UnknownUserError,
    UserProfile,
    coverage_value,
    dump_instance,
    load_instance,
    marginal_utility,
    marginal_value,
    platform_utility,
    sigma,
)
from .msensing import run_msensing
from .online import OnlineConfig, run_online
from .smart import run_smart

__version__ = "0.1.0"

__all__ = [
    "AuctionOutcome",
    "Instance",
    "InstanceError",
    "MSensing",
    "OnlineConfig",
    "OnlineSMART",
    "SMART",
    "TaskCatalog",
    "UnknownUserError",
    "UserProfile",
    "coverage_value",
    "dump_instance",
    "load_instance",
    "marginal_utility",
    "marginal_value",
    "platform_utility",
    "random_arrival_order",
    "run_msensing",
    "run_online",
    "run_smart",
    "sigma",
]
