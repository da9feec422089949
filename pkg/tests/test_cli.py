"""Command-line interface: exit codes, overrides, end-to-end flow."""

import json

import pytest

from presmon.cli import main
from presmon.eventlog import parse_log
from presmon.synthetic import synthetic_log_config


def write_config(path, **overrides):
    cfg = {
        "seed": 13,
        "synthetic": {
            "n_cases": 200,
            "arrival_rate": 0.2,
            "case_length_mean": 2.0,
            "n_features": 3,
            "outcome_base": {"kind": "step", "low": 0.95, "high": 0.05},
            "effect": {"kind": "step", "low": 0.0, "high": 0.9},
            "propensity": {"kind": "constant", "value": 0.5},
        },
        "max_prefix": 1,
        "models": {"n_members": 4, "max_depth": 3, "min_samples_leaf": 20},
        "resources": [1],
        "variants": ["all"],
        "baselines": ["never"],
        "replications": 1,
        "agent": {"hidden": [16, 16], "lr": 0.01},
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


def test_full_flow_exits_zero(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json")
    out = tmp_path / "run"
    assert main(["prepare", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["train", "--out", str(out)]) == 0
    assert main(["simulate", "--out", str(out)]) == 0
    assert main(["report", "--out", str(out)]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    assert len(lines) == 4
    for line in lines:
        json.loads(line)  # each stage prints one machine-readable summary
    assert (out / "report" / "report.json").exists()


def test_missing_config_exits_two(tmp_path, capsys):
    code = main(["prepare", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "run")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_train_without_prepare_exits_two(tmp_path, capsys):
    assert main(["train", "--out", str(tmp_path / "empty")]) == 2


def test_simulate_without_train_exits_three(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json")
    out = tmp_path / "run"
    assert main(["prepare", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["simulate", "--out", str(out)]) == 3
    assert "error:" in capsys.readouterr().err


def test_resource_override_accepts_inf(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json")
    out = tmp_path / "run"
    main(["prepare", "--config", str(cfg), "--out", str(out)])
    main(["train", "--out", str(out)])
    assert main(["simulate", "--out", str(out), "--resources", "1,inf",
                 "--replications", "1"]) == 0
    sim = json.loads((out / "sim" / "simulate_report.json").read_text())
    ids = set(sim["runs"])
    assert any(r.endswith("n=1|rep=0") for r in ids)
    assert any("n=inf" in r for r in ids)


def test_seed_override_changes_prepared_split(tmp_path):
    cfg = write_config(tmp_path / "cfg.json")
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    main(["prepare", "--config", str(cfg), "--out", str(out_a)])
    main(["prepare", "--config", str(cfg), "--out", str(out_b),
          "--seed", "99"])
    a = (out_a / "prepared" / "train.csv").read_bytes()
    b = (out_b / "prepared" / "train.csv").read_bytes()
    assert a != b
    resolved = json.loads((out_b / "config.json").read_text())
    assert resolved["seed"] == 99


def test_gen_synthetic_produces_parseable_log(tmp_path, capsys):
    log_path = tmp_path / "log.csv"
    truth_path = tmp_path / "truth.csv"
    assert main(["gen-synthetic", "--preset", "small", "--seed", "5",
                 "--log", str(log_path), "--truth", str(truth_path)]) == 0
    summary = json.loads(capsys.readouterr().out.splitlines()[-1])
    log = parse_log(log_path, synthetic_log_config())
    assert len(log.cases) == summary["cases"] == 600
    assert truth_path.exists()


def test_gen_synthetic_rejects_unknown_preset(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["gen-synthetic", "--preset", "galactic",
              "--log", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


def test_malformed_config_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["prepare", "--config", str(bad),
                 "--out", str(tmp_path / "run")]) == 2
