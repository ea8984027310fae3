import csv
import io
from dataclasses import replace

import pytest

from smartcrowd.msensing import run_msensing
from smartcrowd.online import OnlineConfig, run_online
from smartcrowd.seeding import derive_seed, seed_from_env, splitmix64
from smartcrowd.simulation import (
    PRESETS,
    RATIO_COLUMNS,
    UTILITY_COLUMNS,
    ConfigError,
    ExperimentConfig,
    GeneratorConfig,
    _trial,
    competitive_ratio_sweep,
    generate_instance,
    rows_to_csv,
    spearman,
    utility_sweep,
)
from smartcrowd.smart import run_smart

SMALL = GeneratorConfig(n=12, m=10, values=(0, 20), bids=(5, 30), task_fraction=0.3, seed=9)


# seeding

def test_splitmix64_reference_values():
    # first outputs of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4


def test_derive_seed_depends_only_on_coordinates():
    assert derive_seed(5, 1, 2) == 5 ^ splitmix64((1 << 32) | 2)
    assert len({derive_seed(0, p, t) for p in range(5) for t in range(5)}) == 25
    with pytest.raises(ValueError):
        derive_seed(0, 2**32, 0)


def test_seed_from_env(monkeypatch):
    monkeypatch.delenv("CROWDSENSE_SEED", raising=False)
    assert seed_from_env(4) == 4
    monkeypatch.setenv("CROWDSENSE_SEED", "0x10")
    assert seed_from_env(4) == 16
    monkeypatch.setenv("CROWDSENSE_SEED", "abc")
    with pytest.raises(ValueError):
        seed_from_env(4)


# generator

def test_generator_deterministic():
    assert generate_instance(SMALL) == generate_instance(SMALL)
    assert generate_instance(SMALL) != generate_instance(replace(SMALL, seed=10))


def test_generator_ranges_and_sizes():
    inst = generate_instance(SMALL)
    assert inst.n == 12 and inst.m == 10
    assert all(0 <= v <= 20 for v in inst.catalog.values)
    assert all(5 <= inst.bid(i) <= 30 and len(inst.profile(i).tasks) == 3 for i in inst.user_ids)


def test_generator_full_fraction_and_minimum_one_task():
    inst = generate_instance(replace(SMALL, task_fraction=1.0))
    assert all(inst.profile(i).tasks == frozenset(range(10)) for i in inst.user_ids)
    assert replace(SMALL, m=3, task_fraction=0.1).tasks_per_user == 1


@pytest.mark.parametrize("kwargs, field", [
    (dict(n=0), "generator.n"),
    (dict(values=(5, 1)), "generator.values"),
    (dict(bids=(0, 5)), "generator.bids"),
    (dict(task_fraction=0.0), "generator.task_fraction"),
    (dict(seed=-1), "generator.seed"),
])
def test_generator_validation_names_field(kwargs, field):
    with pytest.raises(ConfigError, match=field):
        replace(SMALL, **kwargs)


# experiment configs

def small_experiment(**kwargs):
    base = dict(generator=SMALL, parameter="users", points=(6, 12), trials=3,
                mechanisms=("smart", "msensing", "online"))
    base.update(kwargs)
    return ExperimentConfig(**base)


@pytest.mark.parametrize("patch, field", [
    ({"sweep": {"parameter": "colour", "points": [1]}}, "sweep.parameter"),
    ({"sweep": {"parameter": "users", "points": []}}, "sweep.points"),
    ({"sweep": {"parameter": "users", "points": [3, 2]}}, "sweep.points"),
    ({"trials": 0}, "trials"),
    ({"mechanisms": ["vcg"]}, "mechanisms"),
    ({"bogus": 1}, "bogus"),
    ({"generator": {"n": 5, "colour": 1}}, "colour"),
])
def test_config_errors_name_field(patch, field):
    data = small_experiment().to_dict()
    data.update(patch)
    with pytest.raises(ConfigError, match=field):
        ExperimentConfig.from_dict(data)


def test_config_round_trip():
    cfg = small_experiment()
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    for preset in PRESETS.values():
        assert ExperimentConfig.from_dict(preset.to_dict()) == preset


# sweeps

def test_single_point_single_trial_equals_direct_run():
    cfg = small_experiment(points=(12,), trials=1)
    rows = utility_sweep(cfg)
    inst, order = _trial(SMALL, 0, 0)
    expected = {"smart": run_smart(inst).utility, "msensing": run_msensing(inst).utility,
                "online": run_online(inst, order, OnlineConfig(1 / 3)).utility}
    assert {r.mechanism: r.mean_utility for r in rows} == expected
    assert all(r.std_utility == 0 for r in rows)


def test_adding_points_keeps_existing_trials():
    a = utility_sweep(small_experiment(points=(6, 12)))
    b = utility_sweep(small_experiment(points=(6, 12, 18)))
    assert a == b[:len(a)]
    c = utility_sweep(small_experiment(points=(6, 12), trials=5))
    assert [r.extra["utilities"][:3] for r in c] == [r.extra["utilities"] for r in a]


def test_utility_csv_is_deterministic_and_has_fixed_columns():
    cfg = small_experiment()
    text = rows_to_csv(utility_sweep(cfg), ratio=False)
    assert text == rows_to_csv(utility_sweep(cfg), ratio=False)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == UTILITY_COLUMNS
    assert len(rows) == 1 + 2 * 3
    assert "\r" not in text


def test_seed_changes_output():
    cfg = small_experiment()
    assert utility_sweep(cfg) != utility_sweep(cfg.with_seed(10))


def test_ratio_sweep_over_observe_fraction():
    cfg = ExperimentConfig(SMALL, "observe_fraction", (0.2, 0.5), trials=4,
                           mechanisms=("online",), kind="ratio")
    rows = competitive_ratio_sweep(cfg)
    assert [r.sweep_value for r in rows] == [0.2, 0.5]
    for r in rows:
        assert r.ratio_valid_trials <= 4
        assert r.ratio_mean is None or 0 <= r.ratio_mean
    header = rows_to_csv(rows, ratio=True).splitlines()[0].split(",")
    assert header == RATIO_COLUMNS


def test_ratio_sweep_over_task_fraction_reports_best_observe_fraction():
    cfg = ExperimentConfig(SMALL, "fraction", (0.2, 0.6), trials=3, mechanisms=("online",),
                           observe_fractions=(0.2, 0.4), kind="ratio")
    rows = competitive_ratio_sweep(cfg)
    for r in rows:
        assert r.best_observe_fraction in (0.2, 0.4)
        assert r.ratio_mean == max(x for x in r.extra["ratios"] if x is not None)


def test_ratio_row_flagged_when_offline_utility_is_zero():
    # bids above any possible value: nobody is ever selected
    gen = GeneratorConfig(n=4, m=3, values=(0, 2), bids=(50, 60), seed=1)
    cfg = ExperimentConfig(gen, "observe_fraction", (0.5,), trials=2, mechanisms=("online",), kind="ratio")
    (row,) = competitive_ratio_sweep(cfg)
    assert row.flagged
    assert row.ratio_mean is None
    assert rows_to_csv([row], ratio=True).splitlines()[1].split(",")[6] == ""


def test_spearman():
    assert spearman([1, 2, 3], [2, 4, 9]) == pytest.approx(1.0)
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
