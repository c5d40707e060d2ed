import csv
import io
import json
import os

import pytest

from shrinklab.main import config_from_env, load_env_from_file, main
from shrinklab.cogs.models.exceptions import ConfigurationError, UsageError

@pytest.fixture(autouse=True)
def quiet(monkeypatch):
    monkeypatch.setenv("SHRINKLAB_LOG_LEVEL", "WARNING")

@pytest.fixture
def built(tmp_path, capsys):
    """Builds the default instance with both explicit mechanisms into tmp_path."""
    instance = str(tmp_path / "instance.json")
    full = str(tmp_path / "full.json")
    shrunken = str(tmp_path / "shrunken.json")
    assert main(["build", "--out", instance, "--explicit", "full", "--mech-out", full]) == 0
    assert main(["build", "--out", instance, "--explicit", "shrunken", "--mech-out", shrunken]) == 0
    capsys.readouterr()
    return instance, full, shrunken

def test_lemmas_print_five_lines_per_d(capsys):
    assert main(["lemmas", "--d", "4..16"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 13 * 5
    assert all(" pass " in line for line in lines)

def test_exact_lemmas(capsys):
    assert main(["lemmas", "--d", "8,64", "--z", "3/2"]) == 0
    assert "worst_error=0 " in capsys.readouterr().out

def test_sweep_to_stdout(capsys):
    assert main(["sweep", "--d", "8", "--eps", "0"]) == 0
    header, row = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert header == ["d", "epsilon", "K", "rev_shrunk", "rev_full", "ratio", "bound_formula", "limit_gap"]
    assert row[0] == "8"
    assert row[2] == "analytic"
    assert float(row[5]) == pytest.approx(0.75449, abs=1e-5)

def test_sweep_to_file(tmp_path, capsys):
    path = str(tmp_path / "sweep.csv")
    assert main(["sweep", "--d", "8,64", "--eps", "0,0.01", "--csv", path]) == 0
    with open(path, encoding="utf-8") as f:
        assert len(list(csv.reader(f))) == 5
    assert not os.path.exists(path + ".tmp")

def test_build_then_validate(built, capsys):
    instance, full, shrunken = built
    assert main(["validate", "--instance", instance]) == 0
    assert json.loads(capsys.readouterr().out) == {"valid_family": True, "weak_dominated": True}
    assert main(["validate", "--instance", instance, "--mech", full]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ic"] and report["ex_post_ir"] and report["witness"] is None
    assert main(["revenue", "--instance", instance, "--mech", shrunken]) == 0
    market, _, value = capsys.readouterr().out.split()
    assert market == "shrunk"
    assert float(value) == pytest.approx(1.5819767068693265, abs=1e-12)

def test_validate_on_the_wrong_market(built, capsys):
    instance, full, _ = built
    assert main(["validate", "--instance", instance, "--mech", full, "--market", "shrunk"]) == 2
    assert "grids" in capsys.readouterr().err

def test_lp_on_the_shrunken_market(built, tmp_path, capsys):
    instance, _, _ = built
    out = str(tmp_path / "opt.json")
    assert main(["lp", "--instance", instance, "--market", "shrunk", "--out", out]) == 0
    status = capsys.readouterr().out.splitlines()[0].split()
    assert status[:2] == ["status", "optimal"]
    assert float(status[3]) >= 1.5819767068693265 - 1e-7
    assert main(["validate", "--instance", instance, "--mech", out]) == 0

def test_lp_formulations_agree_on_a_small_instance(tmp_path, capsys):
    instance = str(tmp_path / "small.json")
    assert main(["build", "--n", "3", "--d", "5", "--eps", "0.01", "--K", "1", "--out", instance]) == 0
    capsys.readouterr()
    optima = []
    for mode in ("threshold", "adjacent", "all"):
        assert main(["lp", "--instance", instance, "--market", "shrunk", "--ic-pairs", mode]) == 0
        optima.append(float(capsys.readouterr().out.split()[3]))
    assert optima[1] == pytest.approx(optima[0], abs=1e-7)
    assert optima[2] == pytest.approx(optima[0], abs=1e-7)

def test_lp_size_cap_is_a_usage_error(built, monkeypatch, capsys):
    instance, _, _ = built
    monkeypatch.setenv("SHRINKLAB_LP_CAP", "10")
    assert main(["lp", "--instance", instance]) == 2
    assert "profiles: size" in capsys.readouterr().err

def test_bad_winner_restriction(built, capsys):
    instance, _, _ = built
    assert main(["lp", "--instance", instance, "--winners", "top:0"]) == 2
    assert "winners:" in capsys.readouterr().err

def test_transforms_end_to_end(built, tmp_path, capsys):
    instance, _, shrunken = built
    for kind in ("high-priced", "shift"):
        out = str(tmp_path / f"{kind}.json")
        assert main(["transform", "--instance", instance, "--mech", shrunken, "--kind", kind, "--out", out]) == 0
        assert os.path.exists(out)
    assert "fixes" in capsys.readouterr().out

def test_montecarlo(built, capsys):
    instance, full, _ = built
    assert main(["montecarlo", "--instance", instance, "--mech", full, "--samples", "2000", "--seed", "1"]) == 0
    words = capsys.readouterr().out.split()
    assert words[0] == "estimate" and words[-1] == "2000"
    assert main(["montecarlo", "--samples", "2000", "--seed", "1"]) == 0

def test_usage_errors(tmp_path, capsys):
    assert main(["validate", "--instance", str(tmp_path / "missing.json")]) == 2
    assert "does not exist" in capsys.readouterr().err
    assert main(["lemmas", "--d", "8", "--bogus"]) == 2
    assert main([]) == 2
    assert main(["sweep", "--d", "16..8", "--eps", "0"]) == 2
    assert main(["build", "--d", "3", "--out", str(tmp_path / "x.json")]) == 2

def test_corrupt_instance_is_a_usage_error(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    assert main(["validate", "--instance", str(path)]) == 2
    assert "file:" in capsys.readouterr().err

def test_configuration_from_the_environment(monkeypatch):
    monkeypatch.setenv("SHRINKLAB_WORKERS", "4")
    monkeypatch.setenv("SHRINKLAB_DATA_PATH", "/tmp/lab")
    config = config_from_env()
    assert config.workers == 4
    assert config.data_path == "/tmp/lab"
    monkeypatch.setenv("SHRINKLAB_WORKERS", "0")
    with pytest.raises(ConfigurationError):
        config_from_env()
    monkeypatch.setenv("SHRINKLAB_WORKERS", "two")
    with pytest.raises(ConfigurationError) as e:
        config_from_env()
    assert e.value.field == "SHRINKLAB_WORKERS"
    monkeypatch.delenv("SHRINKLAB_WORKERS")
    monkeypatch.setenv("SHRINKLAB_LOG_LEVEL", "loud")
    with pytest.raises(ConfigurationError):
        config_from_env()

def test_bad_configuration_exits_with_usage(monkeypatch, capsys):
    monkeypatch.setenv("SHRINKLAB_SIZE_CAP", "-1")
    assert main(["lemmas", "--d", "8"]) == 2
    assert "SHRINKLAB_SIZE_CAP" in capsys.readouterr().err

def test_env_file(tmp_path, monkeypatch):
    path = tmp_path / ".env"
    path.write_text("# caps\nSHRINKLAB_ORACLE_NODES=5\n\n", encoding="utf-8")
    monkeypatch.delenv("SHRINKLAB_ORACLE_NODES", raising=False)
    load_env_from_file(str(path))
    assert config_from_env().oracle_nodes == 5
    monkeypatch.delenv("SHRINKLAB_ORACLE_NODES")
    path.write_text("no equals sign\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_env_from_file(str(path))
    with pytest.raises(UsageError):
        load_env_from_file(str(tmp_path / "missing.env"))
