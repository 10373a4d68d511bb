import json
from dataclasses import replace

import numpy as np
import pytest

from driftfed import cli
from driftfed.errors import ConfigError
from driftfed.nn import ModelArch
from driftfed.runner import (ALL_STRATEGIES, DataSource, RunConfig, config_from_dict,
                             desk_scale, rerender_reports, run_experiment,
                             validate_config)
from driftfed.synth import generate
from driftfed.timeline import StrategyConfig

from conftest import tiny_scenario


def _tiny_cfg(tmp_path, task="binary", strategies=None, seed=3):
    return desk_scale(RunConfig(
        task=task,
        strategies=strategies or (StrategyConfig("static"), StrategyConfig("simple"),
                                  StrategyConfig("retain", retain_r=20),
                                  StrategyConfig("avg_ema")),
        arch=ModelArch(input_dim=8, output_dim=2 if task == "binary" else 6),
        data=DataSource(synthetic_seed=seed),
        output_dir=str(tmp_path / "run"),
        seed=seed,
    ))


def _tiny_records(seed=3):
    return generate(tiny_scenario(seed=seed, rows=120))


# --- config ------------------------------------------------------------------

def test_validate_config_defaults_clean(tmp_path):
    cfg = RunConfig(output_dir=str(tmp_path))
    assert validate_config(cfg) == []


def test_validate_config_flags_bad_values(tmp_path):
    cfg = RunConfig(
        strategies=(StrategyConfig("retain", retain_r=0),
                    StrategyConfig("avg_ema", ema_alpha=1.5)),
        output_dir=str(tmp_path),
    )
    problems = validate_config(cfg)
    assert any("retain_r" in p for p in problems)
    assert any("ema_alpha" in p for p in problems)

    empty = replace(cfg, strategies=())
    assert any("strategies" in p for p in validate_config(empty))

    bad_caps = replace(RunConfig(output_dir=str(tmp_path)), train_cap=0)
    assert any("caps.train" in p for p in validate_config(bad_caps))

    missing = replace(RunConfig(output_dir=str(tmp_path)),
                      data=DataSource(path="/does/not/exist.csv"))
    assert any("data.path" in p for p in validate_config(missing))

    wrong_out = replace(RunConfig(output_dir=str(tmp_path)),
                        arch=ModelArch(output_dim=6))
    assert any("output_dim" in p for p in validate_config(wrong_out))


def test_config_from_dict_round_trip():
    raw = {
        "task": "sixclass",
        "strategies": [{"kind": "cumulative"}, {"kind": "retain", "retain_r": 500}],
        "data": {"synthetic": {"seed": 4, "rows_per_subattack": 300}},
        "arch": {"hidden_layers": 2, "hidden_units": 8},
        "federation": {"num_clients": 3, "rounds": 2,
                       "train": {"local_epochs": 4, "learning_rate": 0.01}},
        "caps": {"train": 500, "test": 100},
        "seed": 42,
        "output_dir": "out",
    }
    cfg = config_from_dict(raw)
    assert cfg.task == "sixclass"
    assert cfg.arch.output_dim == 6
    assert [s.label for s in cfg.strategies] == ["cumulative", "retain_500"]
    assert cfg.fed.num_clients == 3
    assert cfg.fed.train.local_epochs == 4
    assert cfg.train_cap == 500
    assert cfg.seed == 42


def test_config_from_dict_defaults_to_all_strategies():
    cfg = config_from_dict({})
    assert len(cfg.strategies) == len(ALL_STRATEGIES) == 10


def test_desk_scale_preset():
    cfg = desk_scale(RunConfig())
    assert cfg.arch.hidden_layers == 1
    assert cfg.arch.hidden_units == 16
    assert cfg.fed.rounds == 3
    assert cfg.fed.train.local_epochs == 5


# --- experiment --------------------------------------------------------------

@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("tiny")
    cfg = _tiny_cfg(tmp)
    result = run_experiment(cfg, records=_tiny_records())
    return cfg, result


def test_run_experiment_artifacts_exist(tiny_run):
    cfg, result = tiny_run
    assert result.ok
    expected = {"accuracy_binary.csv", "latency_binary.csv", "cells_binary.csv",
                "composition_binary.csv", "metrics_binary.json", "manifest.json"}
    present = {p.name for p in result.output_dir.iterdir()}
    assert expected <= present
    assert (result.output_dir / "checkpoints" / "static" / "t1.ckpt").exists()
    # static: one checkpoint; the others train at t1..t5
    assert len(list((result.output_dir / "checkpoints" / "static").iterdir())) == 1
    assert len(list((result.output_dir / "checkpoints" / "simple").iterdir())) == 5


def test_accuracy_table_columns_binary(tiny_run):
    _, result = tiny_run
    lines = (result.output_dir / "accuracy_binary.csv").read_text().splitlines()
    header = lines[1].split(",")
    assert header == ["strategy", "t1", "t2", "t3", "t4", "t5", "t6", "avg"]
    assert [line.split(",")[0] for line in lines[2:]] == \
           ["static", "simple", "retain_20", "avg_ema"]


def test_latency_table_positive_training_cells(tiny_run):
    _, result = tiny_run
    lines = (result.output_dir / "latency_binary.csv").read_text().splitlines()
    header = lines[1].split(",")
    assert header[-2:] == ["train_total", "inference_total"]
    for line in lines[2:]:
        cells = line.split(",")
        filled = [float(v) for v in cells[1:] if v != ""]
        assert all(v > 0 for v in filled)


def test_manifest_records_config_and_status(tiny_run):
    cfg, result = tiny_run
    manifest = json.loads((result.output_dir / "manifest.json").read_text())
    assert manifest["config"]["seed"] == cfg.seed
    assert manifest["partial"] is False
    assert set(manifest["statuses"]) == {"static", "simple", "retain_20", "avg_ema"}
    assert all(v == "ok" for v in manifest["statuses"].values())


def test_cells_table_is_full_matrix(tiny_run):
    _, result = tiny_run
    lines = (result.output_dir / "cells_binary.csv").read_text().splitlines()
    rows = [line.split(",") for line in lines[2:]]
    static_rows = [r for r in rows if r[0] == "static"]
    simple_rows = [r for r in rows if r[0] == "simple"]
    assert len(static_rows) == 1 * 6
    assert len(simple_rows) == 5 * 6


def test_rerun_with_same_config_byte_identical(tmp_path):
    cfg_a = _tiny_cfg(tmp_path / "a")
    cfg_b = _tiny_cfg(tmp_path / "b")
    res_a = run_experiment(cfg_a, records=_tiny_records())
    res_b = run_experiment(cfg_b, records=_tiny_records())
    for name in ("accuracy_binary.csv", "cells_binary.csv", "composition_binary.csv"):
        assert (res_a.output_dir / name).read_bytes() == \
               (res_b.output_dir / name).read_bytes()
    ckpts_a = sorted((res_a.output_dir / "checkpoints").rglob("*.ckpt"))
    ckpts_b = sorted((res_b.output_dir / "checkpoints").rglob("*.ckpt"))
    assert [p.relative_to(res_a.output_dir) for p in ckpts_a] == \
           [p.relative_to(res_b.output_dir) for p in ckpts_b]
    for pa, pb in zip(ckpts_a, ckpts_b):
        assert pa.read_bytes() == pb.read_bytes()


def test_sixclass_accuracy_table_columns(tmp_path):
    cfg = _tiny_cfg(tmp_path, task="sixclass",
                    strategies=(StrategyConfig("cumulative"),))
    result = run_experiment(cfg, records=_tiny_records())
    lines = (result.output_dir / "accuracy_sixclass.csv").read_text().splitlines()
    assert lines[1].split(",") == \
        ["strategy", "t0", "t1", "t2", "t3", "t4", "t5", "t6", "avg"]
    assert len(list((result.output_dir / "checkpoints" / "cumulative").iterdir())) == 6


def test_run_experiment_rejects_invalid_config(tmp_path):
    cfg = replace(_tiny_cfg(tmp_path),
                  strategies=(StrategyConfig("retain", retain_r=0),))
    with pytest.raises(ConfigError):
        run_experiment(cfg, records=_tiny_records())


def test_partial_failure_flagged_in_manifest(tmp_path, monkeypatch):
    import driftfed.runner as runner_mod
    real = runner_mod.run_strategy

    def boom(cfg, prep, strategy):
        if strategy.label == "simple":
            raise ConfigError("induced failure")
        return real(cfg, prep, strategy)

    monkeypatch.setattr(runner_mod, "run_strategy", boom)
    cfg = _tiny_cfg(tmp_path)
    result = run_experiment(cfg, records=_tiny_records())
    assert not result.ok
    assert "simple" in result.failures
    manifest = json.loads((result.output_dir / "manifest.json").read_text())
    assert manifest["partial"] is True
    assert manifest["statuses"]["simple"].startswith("failed:")
    assert manifest["statuses"]["static"] == "ok"


def test_report_rerender_matches_original(tiny_run):
    _, result = tiny_run
    original = (result.output_dir / "accuracy_binary.csv").read_bytes()
    latency = (result.output_dir / "latency_binary.csv").read_bytes()
    written = rerender_reports(result.output_dir)
    assert "accuracy_binary.csv" in written
    assert (result.output_dir / "accuracy_binary.csv").read_bytes() == original
    assert (result.output_dir / "latency_binary.csv").read_bytes() == latency


# --- CLI ---------------------------------------------------------------------

def test_cli_gen_data_validate_run_report(tmp_path, capsys):
    data_path = tmp_path / "flows.csv"
    assert cli.main(["gen-data", "--out", str(data_path), "--seed", "2",
                     "--rows", "40"]) == 0
    assert data_path.exists()
    colspec = data_path.with_suffix(".columns.json")
    assert colspec.exists()

    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "task": "binary",
        "strategies": [{"kind": "static"}, {"kind": "cumulative"}],
        "data": {"path": str(data_path), "column_spec": str(colspec)},
        "arch": {"input_dim": 45},
        "federation": {"num_clients": 2, "rounds": 1, "train": {"local_epochs": 1}},
        "seed": 5,
        "output_dir": str(tmp_path / "out"),
        "desk_scale": True,
    }))
    assert cli.main(["validate", "--config", str(cfg_path)]) == 0
    assert "config ok" in capsys.readouterr().out

    assert cli.main(["run", "--config", str(cfg_path),
                     "--strategies", "cumulative"]) == 0
    out = capsys.readouterr().out
    assert "ok: cumulative" in out
    assert (tmp_path / "out" / "accuracy_binary.csv").exists()

    assert cli.main(["report", "--run-dir", str(tmp_path / "out")]) == 0


def test_cli_validate_reports_problems(tmp_path, capsys):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({
        "strategies": [{"kind": "retain", "retain_r": 0}],
        "output_dir": str(tmp_path),
    }))
    assert cli.main(["validate", "--config", str(cfg_path)]) == 1
    assert "retain_r" in capsys.readouterr().out


def test_cli_unknown_strategy_filter_fails(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"output_dir": str(tmp_path / "o"), "seed": 1}))
    assert cli.main(["run", "--config", str(cfg_path),
                     "--strategies", "bogus"]) == 2
    assert "bogus" in capsys.readouterr().err
