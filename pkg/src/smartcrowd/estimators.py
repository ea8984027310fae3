"""Estimator-style wrappers around the mechanisms.

Each user of an instance plays the role of a sample: ``fit`` runs the
auction, ``fit_predict`` returns the per-user winner indicator and ``score``
returns the platform utility.  Hyper-parameters go through
``get_params``/``set_params`` so mechanisms can be cloned and swept like any
other scikit-learn estimator.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .model import AuctionOutcome, Instance
from .msensing import run_msensing
from .online import OnlineConfig, run_online
from .smart import run_smart
from .validation import check_arrival_order, check_fraction, check_instance, check_seed

__all__ = ["SMART", "MSensing", "OnlineSMART", "random_arrival_order"]


def random_arrival_order(instance: Instance, seed: int) -> tuple[int, ...]:
    """Uniform random permutation of the user ids, reproducible from ``seed``."""
    rng = np.random.default_rng(check_seed(seed, "arrival seed"))
    return tuple(int(i) for i in rng.permutation(np.array(instance.user_ids, dtype=np.int64)))


class _Mechanism(BaseEstimator):
    name = "mechanism"

    def run(self, instance: Instance) -> AuctionOutcome:
        raise NotImplementedError

    def fit(self, X, y=None):
        instance = check_instance(X)
        self.outcome_ = self.run(instance)
        self.winners_ = self.outcome_.winners
        self.payments_ = dict(self.outcome_.payments)
        self.utility_ = self.outcome_.utility
        self.user_ids_ = np.array(instance.user_ids, dtype=np.int64)
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        """Boolean winner indicator aligned with the instance's user ids."""
        self.fit(X)
        return np.array([i in self.winners_ for i in self.user_ids_], dtype=bool)

    def payment_vector(self) -> np.ndarray:
        check_is_fitted(self, "outcome_")
        return np.array([self.payments_.get(int(i), 0) for i in self.user_ids_], dtype=np.int64)

    def score(self, X, y=None) -> int:
        return self.fit(X).utility_


class SMART(_Mechanism):
    """Offline SMART mechanism."""

    name = "smart"

    def run(self, instance):
        return run_smart(instance)


class MSensing(_Mechanism):
    """M-Sensing baseline."""

    name = "msensing"

    def run(self, instance):
        return run_msensing(instance)


class OnlineSMART(_Mechanism):
    """Streaming mechanism.

    Parameters
    ----------
    observe_fraction : float
        Share of arrivals that are only observed.
    arrival_order : sequence of int, optional
        Fixed arrival order. When omitted, a uniform shuffle drawn from
        ``arrival_seed`` is used.
    arrival_seed : int
        Seed for the shuffle.
    """

    name = "online"

    def __init__(self, observe_fraction=1 / 3, arrival_order=None, arrival_seed=0):
        self.observe_fraction = observe_fraction
        self.arrival_order = arrival_order
        self.arrival_seed = arrival_seed

    def order_for(self, instance: Instance) -> tuple[int, ...]:
        if self.arrival_order is not None:
            return check_arrival_order(instance, self.arrival_order)
        return random_arrival_order(instance, self.arrival_seed)

    def run(self, instance):
        fraction = check_fraction(self.observe_fraction, "observe_fraction")
        return run_online(instance, self.order_for(instance), OnlineConfig(fraction))
