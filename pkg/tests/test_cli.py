import json
import subprocess
import sys

import pytest

from smartcrowd.cli import main
from smartcrowd.estimators import MSensing, OnlineSMART, SMART
from smartcrowd.model import dump_instance
from smartcrowd.simulation import GeneratorConfig, generate_instance

QUICK_CONFIG = {
    "kind": "utility",
    "generator": {"n": 10, "m": 8, "values": [0, 20], "bids": [5, 30], "task_fraction": 0.3, "seed": 3},
    "sweep": {"parameter": "users", "points": [5, 10]},
    "trials": 2,
    "mechanisms": ["smart", "msensing", "online"],
}


@pytest.fixture
def instance_file(tmp_path):
    inst = generate_instance(GeneratorConfig(n=15, m=12, seed=4))
    path = tmp_path / "inst.json"
    dump_instance(inst, path)
    return inst, path


def test_example_prints_walkthrough(capsys):
    assert main(["example"]) == 0
    out = capsys.readouterr().out
    assert "Screening order S = [1, 3, 2]" in out
    assert "SMART: T={2, 3, 5} payments p_2=8 p_3=7 p_5=8 utility 27" in out
    assert "utility 20" in out


@pytest.mark.parametrize("mech", ["smart", "msensing", "online"])
def test_run_matches_library(instance_file, tmp_path, mech):
    inst, path = instance_file
    out = tmp_path / "out.json"
    assert main(["run", str(path), "--mechanism", mech, "--arrival-seed", "2",
                 "--observe-fraction", "0.4", "--out", str(out)]) == 0
    result = json.loads(out.read_text())
    est = {"smart": SMART(), "msensing": MSensing(), "online": OnlineSMART(0.4, arrival_seed=2)}[mech]
    assert {k: result[k] for k in ("winners", "payments", "utility")} == est.fit(inst).outcome_.to_dict()


def test_run_reports_offending_field(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"tasks": [{"id": 0, "value": 3}], "users": [{"id": 1, "tasks": [0]}]}))
    assert main(["run", str(path)]) == 2
    assert "bid" in capsys.readouterr().err


def test_run_missing_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.json")]) == 2
    assert "nope.json" in capsys.readouterr().err


def test_run_rejects_bad_fraction(instance_file):
    _, path = instance_file
    with pytest.raises(SystemExit):
        main(["run", str(path), "--observe-fraction", "1.5"])


def test_simulate_config_is_byte_identical(tmp_path, monkeypatch):
    monkeypatch.delenv("CROWDSENSE_SEED", raising=False)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(QUICK_CONFIG))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", str(cfg), "--out", str(a)]) == 0
    assert main(["simulate", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0].startswith("sweep_value,mechanism,mean_utility")
    monkeypatch.setenv("CROWDSENSE_SEED", "77")
    assert main(["simulate", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() != b.read_bytes()
    assert b.read_text().splitlines()[1].endswith(",77")


def test_simulate_reports_config_field(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({**QUICK_CONFIG, "trials": 0}))
    assert main(["simulate", str(cfg)]) == 2
    assert "trials" in capsys.readouterr().err
    cfg.write_text("{")
    assert main(["simulate", str(cfg)]) == 2


def test_verify_count_zero(tmp_path, capsys):
    out = tmp_path / "v.jsonl"
    assert main(["verify", "--count", "0", "--out", str(out)]) == 0
    assert out.read_text() == ""
    assert json.loads(capsys.readouterr().out)["instances"] == 0


def test_verify_writes_violations_and_fails(tmp_path, capsys):
    out = tmp_path / "v.jsonl"
    code = main(["verify", "--seed", "2", "--count", "300", "--max-users", "6",
                 "--max-tasks", "5", "--out", str(out)])
    lines = out.read_text().splitlines()
    assert code == (1 if lines else 0)
    assert all(json.loads(line)["seed"] is not None for line in lines)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "smartcrowd", "example"],
                          capture_output=True, text=True, check=True)
    assert "utility 27" in proc.stdout
