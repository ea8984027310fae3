"""Random instance generation and the utility / competitive-ratio sweeps.

Every trial draws from its own generator seeded by
:func:`~smartcrowd.seeding.derive_seed`, so results depend only on the
configuration and never on execution order.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .model import Instance, UserProfile, TaskCatalog
from .msensing import run_msensing
from .online import OnlineConfig, run_online
from .seeding import derive_seed
from .smart import run_smart
from .validation import check_fraction, check_seed

__all__ = [
    "GeneratorConfig",
    "ExperimentConfig",
    "SweepRow",
    "MECHANISMS",
    "SWEEP_PARAMETERS",
    "PRESETS",
    "generate_instance",
    "utility_sweep",
    "competitive_ratio_sweep",
    "run_experiment",
    "rows_to_csv",
    "spearman",
]

MECHANISMS = ("smart", "msensing", "online")
SWEEP_PARAMETERS = ("users", "tasks", "fraction", "observe_fraction")
UTILITY_COLUMNS = ["sweep_value", "mechanism", "mean_utility", "std_utility", "trials", "seed"]
RATIO_COLUMNS = UTILITY_COLUMNS + ["ratio_mean", "ratio_valid_trials", "best_observe_fraction"]
DEFAULT_OBSERVE_GRID = tuple(round(0.10 + 0.05 * k, 2) for k in range(17))


class ConfigError(ValueError):
    pass


def _int_range(value, name: str) -> tuple[int, int]:
    try:
        lo, hi = value
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a [lo, hi] pair") from None
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in (lo, hi)):
        raise ConfigError(f"{name} bounds must be integers")
    if lo > hi:
        raise ConfigError(f"{name} is empty: {lo} > {hi}")
    return int(lo), int(hi)


@dataclass(frozen=True)
class GeneratorConfig:
    n: int = 100
    m: int = 30
    values: tuple[int, int] = (0, 40)
    bids: tuple[int, int] = (5, 50)
    task_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self):
        for name in ("n", "m"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"generator.{name} must be a positive integer, got {v!r}")
        object.__setattr__(self, "values", _int_range(self.values, "generator.values"))
        object.__setattr__(self, "bids", _int_range(self.bids, "generator.bids"))
        if self.values[0] < 0:
            raise ConfigError("generator.values must be non-negative")
        if self.bids[0] < 1:
            raise ConfigError("generator.bids must be positive")
        try:
            check_fraction(self.task_fraction, "generator.task_fraction", high_inclusive=True)
            check_seed(self.seed, "generator.seed")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def tasks_per_user(self) -> int:
        # round half up; never fewer than one task
        return max(1, math.floor(self.task_fraction * self.m + 0.5))

    @classmethod
    def from_dict(cls, data: Mapping) -> "GeneratorConfig":
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"generator: unknown field '{sorted(unknown)[0]}'")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})


def _draw_instance(config: GeneratorConfig, rng: np.random.Generator) -> Instance:
    values = rng.integers(config.values[0], config.values[1] + 1, size=config.m)
    size = min(config.tasks_per_user, config.m)
    users = []
    for i in range(1, config.n + 1):
        tasks = rng.choice(config.m, size=size, replace=False)
        bid = int(rng.integers(config.bids[0], config.bids[1] + 1))
        users.append(UserProfile(i, frozenset(int(t) for t in tasks), bid))
    return Instance(TaskCatalog(tuple(int(v) for v in values)), users)


def generate_instance(config: GeneratorConfig) -> Instance:
    """Integer-uniform task values and bids; each user covers a uniform random
    subset of ``tasks_per_user`` distinct tasks."""
    return _draw_instance(config, np.random.default_rng(config.seed))


def _trial(config: GeneratorConfig, point: int, trial: int):
    """Instance and arrival order of one trial, both from the trial's own stream."""
    rng = np.random.default_rng(derive_seed(config.seed, point, trial))
    instance = _draw_instance(config, rng)
    order = tuple(int(i) for i in rng.permutation(np.arange(1, config.n + 1)))
    return instance, order


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorConfig
    parameter: str
    points: tuple
    trials: int = 20
    mechanisms: tuple[str, ...] = ("smart", "msensing")
    observe_fraction: float = 1 / 3
    observe_fractions: tuple[float, ...] = DEFAULT_OBSERVE_GRID
    kind: str = "utility"

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep.parameter must be one of {SWEEP_PARAMETERS}, got {self.parameter!r}")
        if self.kind not in ("utility", "ratio"):
            raise ConfigError(f"kind must be 'utility' or 'ratio', got {self.kind!r}")
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        points = tuple(self.points)
        if not points:
            raise ConfigError("sweep.points must be nonempty")
        if any(b <= a for a, b in zip(points, points[1:])):
            raise ConfigError("sweep.points must be strictly increasing")
        object.__setattr__(self, "points", points)
        bad = [m for m in self.mechanisms if m not in MECHANISMS]
        if bad:
            raise ConfigError(f"mechanisms: unknown mechanism {bad[0]!r}")
        object.__setattr__(self, "observe_fractions", tuple(self.observe_fractions))
        for f in (self.observe_fraction, *self.observe_fractions):
            try:
                check_fraction(f, "observe fraction")
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if self.kind == "ratio" and self.parameter not in ("observe_fraction", "fraction"):
            raise ConfigError("ratio sweeps vary 'observe_fraction' or 'fraction'")
        if self.kind == "utility" and self.parameter == "observe_fraction" and "online" not in self.mechanisms:
            raise ConfigError("an observe_fraction utility sweep needs the online mechanism")
        for p in points:
            self.generator_at(p)

    def generator_at(self, value) -> GeneratorConfig:
        try:
            if self.parameter == "users":
                return replace(self.generator, n=value)
            if self.parameter == "tasks":
                return replace(self.generator, m=value)
            if self.parameter == "fraction":
                return replace(self.generator, task_fraction=value)
        except (ConfigError, TypeError) as exc:
            raise ConfigError(f"sweep.points: {exc}") from None
        return self.generator

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, generator=replace(self.generator, seed=seed))

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("experiment config must be a JSON object")
        known = {"kind", "generator", "sweep", "trials", "mechanisms",
                 "observe_fraction", "observe_fractions", "name", "description"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown field '{sorted(unknown)[0]}'")
        for key in ("generator", "sweep"):
            if key not in data:
                raise ConfigError(f"missing field '{key}'")
        sweep = data["sweep"]
        if not isinstance(sweep, Mapping) or "parameter" not in sweep or "points" not in sweep:
            raise ConfigError("sweep must have 'parameter' and 'points'")
        kwargs = {k: data[k] for k in ("kind", "trials", "observe_fraction") if k in data}
        for key in ("mechanisms", "observe_fractions"):
            if key in data:
                kwargs[key] = tuple(data[key])
        return cls(GeneratorConfig.from_dict(data["generator"]), sweep["parameter"],
                   tuple(sweep["points"]), **kwargs)

    def to_dict(self) -> dict:
        gen = asdict(self.generator)
        gen["values"], gen["bids"] = list(gen["values"]), list(gen["bids"])
        return {
            "kind": self.kind,
            "generator": gen,
            "sweep": {"parameter": self.parameter, "points": list(self.points)},
            "trials": self.trials,
            "mechanisms": list(self.mechanisms),
            "observe_fraction": self.observe_fraction,
            "observe_fractions": list(self.observe_fractions),
        }


@dataclass(frozen=True)
class SweepRow:
    sweep_value: float
    mechanism: str
    mean_utility: float
    std_utility: float
    trials: int
    seed: int
    ratio_mean: Optional[float] = None
    ratio_valid_trials: Optional[int] = None
    best_observe_fraction: Optional[float] = None
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def flagged(self) -> bool:
        """A ratio row where no trial had positive offline utility."""
        return self.ratio_valid_trials == 0


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def utility_sweep(config: ExperimentConfig) -> list[SweepRow]:
    """Mean platform utility of each mechanism at every sweep point."""
    rows = []
    for p, value in enumerate(config.points):
        gen = config.generator_at(value)
        observe = value if config.parameter == "observe_fraction" else config.observe_fraction
        utilities = {mech: [] for mech in config.mechanisms}
        for t in range(config.trials):
            instance, order = _trial(gen, p, t)
            for mech in config.mechanisms:
                if mech == "smart":
                    outcome = run_smart(instance)
                elif mech == "msensing":
                    outcome = run_msensing(instance)
                else:
                    outcome = run_online(instance, order, OnlineConfig(observe))
                utilities[mech].append(outcome.utility)
        for mech in config.mechanisms:
            mean, std = _mean_std(utilities[mech])
            rows.append(SweepRow(value, mech, mean, std, config.trials, config.generator.seed,
                                 extra={"utilities": utilities[mech]}))
    return rows


def _ratio_table(gen: GeneratorConfig, point: int, trials: int, observe_fractions):
    """Per-trial offline utility and online utilities for every observe fraction.

    Trials share instances and arrival orders across observe fractions.
    """
    offline = np.zeros(trials, dtype=np.int64)
    online = np.zeros((len(observe_fractions), trials), dtype=np.int64)
    for t in range(trials):
        instance, order = _trial(gen, point, t)
        offline[t] = run_smart(instance).utility
        for q, f in enumerate(observe_fractions):
            online[q, t] = run_online(instance, order, OnlineConfig(f)).utility
    return offline, online


def _ratio_stats(offline: np.ndarray, online_row: np.ndarray):
    valid = offline > 0
    count = int(valid.sum())
    ratio = float((online_row[valid] / offline[valid]).mean()) if count else None
    return ratio, count


def competitive_ratio_sweep(config: ExperimentConfig) -> list[SweepRow]:
    """Online-over-offline utility ratios.

    With ``parameter == "observe_fraction"`` one row per observe fraction.
    With ``parameter == "fraction"`` one row per task fraction, holding the
    best ratio over ``observe_fractions`` and the fraction that achieved it.
    Trials whose offline utility is 0 are left out of the ratio mean.
    """
    rows = []
    seed = config.generator.seed
    if config.parameter == "observe_fraction":
        offline, online = _ratio_table(config.generator, 0, config.trials, config.points)
        for q, f in enumerate(config.points):
            ratio, count = _ratio_stats(offline, online[q])
            mean, std = _mean_std(online[q])
            rows.append(SweepRow(f, "online", mean, std, config.trials, seed, ratio, count,
                                 extra={"offline_mean": float(offline.mean())}))
        return rows

    for p, value in enumerate(config.points):
        gen = config.generator_at(value)
        offline, online = _ratio_table(gen, p, config.trials, config.observe_fractions)
        stats = [_ratio_stats(offline, online[q]) for q in range(len(config.observe_fractions))]
        scored = [(r, -q) for q, (r, _) in enumerate(stats) if r is not None]
        if scored:
            best_q = -max(scored)[1]
            ratio, count = stats[best_q]
            best_f = config.observe_fractions[best_q]
        else:
            best_q, ratio, count, best_f = 0, None, 0, None
        mean, std = _mean_std(online[best_q])
        rows.append(SweepRow(value, "online", mean, std, config.trials, seed, ratio, count, best_f,
                             extra={"ratios": [r for r, _ in stats]}))
    return rows


def run_experiment(config: ExperimentConfig) -> list[SweepRow]:
    if config.kind == "ratio":
        return competitive_ratio_sweep(config)
    return utility_sweep(config)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(round(value, 10))
    return str(value)


def rows_to_csv(rows: Sequence[SweepRow], ratio: bool) -> str:
    columns = RATIO_COLUMNS if ratio else UTILITY_COLUMNS
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in columns])
    return buf.getvalue()


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    from scipy.stats import spearmanr

    return float(spearmanr(x, y).statistic)


def _preset(kind, parameter, points, trials, mechanisms=("smart", "msensing"), **gen):
    return ExperimentConfig(GeneratorConfig(**gen), parameter, tuple(points), trials,
                            tuple(mechanisms), kind=kind)


# Standard sweeps. The users sweep runs at m=200; pass a config for m=1000.
PRESETS = {
    "utility-vs-users": _preset("utility", "users", range(50, 301, 50), 20,
                    n=50, m=200, values=(30, 50), bids=(5, 50), task_fraction=0.25),
    "utility-vs-tasks": _preset("utility", "tasks", range(50, 301, 50), 20,
                    n=100, m=50, values=(0, 20), bids=(5, 50), task_fraction=0.25),
    "utility-vs-fraction": _preset("utility", "fraction", [round(0.1 * k, 1) for k in range(1, 10)], 20,
                    n=50, m=100, values=(0, 20), bids=(5, 50), task_fraction=0.25),
    "ratio-vs-observe": _preset("ratio", "observe_fraction", DEFAULT_OBSERVE_GRID, 200, ("online",),
                    n=100, m=30, values=(0, 40), bids=(5, 50), task_fraction=0.25),
    "ratio-vs-fraction": _preset("ratio", "fraction", [round(0.1 * k, 1) for k in range(1, 10)], 100, ("online",),
                    n=100, m=30, values=(0, 40), bids=(5, 50), task_fraction=0.25),
}
