import math

import numpy as np
import pytest

from driftfed.dataset import LabeledData
from driftfed.errors import AggregationError, ConfigError, FederationError
from driftfed.federation import (Checkpoint, FedConfig, PeriodInput, fedavg_aggregate,
                                 init_from_history, load_checkpoint, run_round,
                                 run_timeline, save_checkpoint)
from driftfed.nn import ModelArch, TrainConfig, init_params, param_count, train_local, unflatten
from driftfed.seeds import rng_for
from driftfed.timeline import StrategyConfig

ARCH = ModelArch(input_dim=2, hidden_layers=1, hidden_units=2, output_dim=2)
N = param_count(ARCH)  # 58, even


def _params_from(vec):
    return unflatten(ARCH, np.asarray(vec, dtype=float))


def test_fedavg_hand_computed_weighted_mean():
    # per-element oracle: (2*1 + 6*5)/8 = 4 and (2*3 + 6*7)/8 = 6
    a = _params_from(np.tile([1.0, 3.0], N // 2))
    b = _params_from(np.tile([5.0, 7.0], N // 2))
    merged = fedavg_aggregate([a, b], [2, 6])
    assert np.allclose(merged.flatten(), np.tile([4.0, 6.0], N // 2), atol=1e-12)


def test_fedavg_single_client_identity():
    params = init_params(ARCH, seed=0)
    merged = fedavg_aggregate([params], [123])
    assert np.array_equal(merged.flatten(), params.flatten())


def test_fedavg_identical_params_fixed_point(rng):
    params = _params_from(rng.normal(size=N))
    merged = fedavg_aggregate([params, params, params], [1, 10, 100])
    assert np.allclose(merged.flatten(), params.flatten(), atol=1e-12)


def test_fedavg_permutation_and_scale_invariance(rng):
    plist = [_params_from(rng.normal(size=N)) for _ in range(4)]
    sizes = [3, 9, 1, 7]
    base = fedavg_aggregate(plist, sizes).flatten()
    perm = [2, 0, 3, 1]
    shuffled = fedavg_aggregate([plist[i] for i in perm],
                                [sizes[i] for i in perm]).flatten()
    scaled = fedavg_aggregate(plist, [s * 10 for s in sizes]).flatten()
    assert np.max(np.abs(base - shuffled)) < 1e-12
    assert np.max(np.abs(base - scaled)) < 1e-12


def test_fedavg_convex_hull(rng):
    plist = [_params_from(rng.normal(size=N)) for _ in range(5)]
    merged = fedavg_aggregate(plist, [2, 3, 4, 5, 6]).flatten()
    stack = np.stack([p.flatten() for p in plist])
    assert np.all(merged >= stack.min(axis=0) - 1e-12)
    assert np.all(merged <= stack.max(axis=0) + 1e-12)


def test_fedavg_error_cases(rng):
    params = init_params(ARCH, seed=0)
    other = init_params(ModelArch(input_dim=3, hidden_layers=1, hidden_units=2,
                                  output_dim=2), seed=0)
    with pytest.raises(AggregationError):
        fedavg_aggregate([], [])
    with pytest.raises(AggregationError):
        fedavg_aggregate([params, other], [1, 1])
    with pytest.raises(AggregationError):
        fedavg_aggregate([params], [0])


def _shards(rng, n_clients=3, rows=24):
    shards = []
    for _ in range(n_clients):
        X = rng.normal(size=(rows, 2))
        y = (X[:, 0] > 0).astype(int)
        shards.append(LabeledData(X, y))
    return shards


def test_run_round_empty_shard_names_client(rng):
    shards = _shards(rng)
    shards[1] = LabeledData(np.zeros((0, 2)), np.zeros(0, dtype=int))
    cfg = FedConfig(num_clients=3, rounds=1, train=TrainConfig(local_epochs=1), seed=0)
    with pytest.raises(FederationError, match="client 1"):
        run_round(init_params(ARCH, seed=0), shards, cfg)


def test_run_round_deterministic(rng):
    shards = _shards(rng)
    cfg = FedConfig(num_clients=3, rounds=1, train=TrainConfig(local_epochs=2), seed=5)
    start = init_params(ARCH, seed=1)
    out1, secs1 = run_round(start, shards, cfg, round_index=4)
    out2, _ = run_round(start, shards, cfg, round_index=4)
    assert np.array_equal(out1.flatten(), out2.flatten())
    assert len(secs1) == 3 and all(s > 0 for s in secs1)


def test_run_round_single_client_equals_local_training(rng):
    shards = _shards(rng, n_clients=1)
    cfg = FedConfig(num_clients=1, rounds=1, train=TrainConfig(local_epochs=2), seed=9)
    start = init_params(ARCH, seed=2)
    merged, _ = run_round(start, shards, cfg, round_index=0)
    seed = int(rng_for(cfg.seed, "round", 0, "client", 0).integers(0, 2**63 - 1))
    local, _, _ = train_local(start, shards[0],
                              TrainConfig(local_epochs=2, seed=seed))
    assert np.array_equal(merged.flatten(), local.flatten())


def test_fed_config_validation():
    with pytest.raises(ConfigError):
        FedConfig(num_clients=0)
    with pytest.raises(ConfigError):
        FedConfig(rounds=0)


def _checkpoint(vec, period, count):
    return Checkpoint(_params_from(vec), period, count, 0.0)


def test_init_from_history_single_checkpoint_identity(rng):
    ckpt = _checkpoint(rng.normal(size=N), 1, 10)
    for mode in ("equal", "sample", "ema"):
        merged = init_from_history(mode, [ckpt])
        assert np.array_equal(merged.flatten(), ckpt.params.flatten())


def test_init_from_history_ema_hand_recursion():
    zeros = _checkpoint(np.zeros(N), 1, 10)
    ones = _checkpoint(np.ones(N), 2, 10)
    two = init_from_history("ema", [zeros, ones], ema_alpha=0.6)
    assert np.allclose(two.flatten(), 0.6, atol=1e-15)
    three = init_from_history("ema", [zeros, ones, _checkpoint(np.ones(N), 3, 10)],
                              ema_alpha=0.6)
    # 0.6*1 + 0.4*0.6 = 0.84
    assert np.allclose(three.flatten(), 0.84, atol=1e-15)


def test_init_from_history_sample_weighted_hand_value():
    a = _checkpoint(np.zeros(N), 1, 100)
    b = _checkpoint(np.ones(N), 2, 300)
    merged = init_from_history("sample", [a, b])
    assert np.allclose(merged.flatten(), 0.75, atol=1e-15)


def test_init_from_history_equal_mean(rng):
    vecs = [rng.normal(size=N) for _ in range(3)]
    ckpts = [_checkpoint(v, i, 5) for i, v in enumerate(vecs)]
    merged = init_from_history("equal", ckpts)
    assert np.allclose(merged.flatten(), np.mean(vecs, axis=0), atol=1e-14)


def test_init_from_history_errors(rng):
    with pytest.raises(AggregationError):
        init_from_history("equal", [])
    with pytest.raises(ConfigError):
        init_from_history("median", [_checkpoint(np.zeros(N), 1, 1)])


def _period_inputs(rng, periods, rows=30):
    inputs = []
    for p in periods:
        shards = _shards(rng, n_clients=2, rows=rows)
        vals = _shards(rng, n_clients=2, rows=6)
        inputs.append(PeriodInput(p, shards, vals))
    return inputs


def test_run_timeline_chains_checkpoints_bit_exact(rng):
    cfg = FedConfig(num_clients=2, rounds=2, train=TrainConfig(local_epochs=1), seed=3)
    result = run_timeline(StrategyConfig("cumulative"),
                          _period_inputs(rng, [1, 2, 3]), cfg, ARCH)
    assert [c.period_id for c in result.checkpoints] == [1, 2, 3]
    for prev, period in zip(result.checkpoints, [2, 3]):
        assert np.array_equal(result.initial_params[period].flatten(),
                              prev.params.flatten())
    assert all(c.train_wall_clock > 0 for c in result.checkpoints)
    assert all(c.train_sample_count == 60 for c in result.checkpoints)
    assert all(log.val_accuracy is not None for log in result.round_logs)


def test_run_timeline_static_single_checkpoint(rng):
    cfg = FedConfig(num_clients=2, rounds=1, train=TrainConfig(local_epochs=1), seed=3)
    result = run_timeline(StrategyConfig("static"), _period_inputs(rng, [1]), cfg, ARCH)
    assert len(result.checkpoints) == 1


def test_run_timeline_averaging_initializes_from_history(rng):
    cfg = FedConfig(num_clients=2, rounds=1, train=TrainConfig(local_epochs=1), seed=3)
    result = run_timeline(StrategyConfig("avg_ema", ema_alpha=0.6),
                          _period_inputs(rng, [1, 2, 3]), cfg, ARCH)
    expected = init_from_history("ema", result.checkpoints[:2], ema_alpha=0.6)
    assert np.array_equal(result.initial_params[3].flatten(), expected.flatten())
    sample = run_timeline(StrategyConfig("avg_sample"),
                          _period_inputs(rng, [1, 2, 3]), cfg, ARCH)
    expected = init_from_history("sample", sample.checkpoints[:2])
    assert np.array_equal(sample.initial_params[3].flatten(), expected.flatten())


def test_run_timeline_full_determinism(rng):
    cfg = FedConfig(num_clients=2, rounds=2, train=TrainConfig(local_epochs=1), seed=8)
    gen_a = np.random.default_rng(42)
    gen_b = np.random.default_rng(42)
    res_a = run_timeline(StrategyConfig("simple"), _period_inputs(gen_a, [1, 2]), cfg, ARCH)
    res_b = run_timeline(StrategyConfig("simple"), _period_inputs(gen_b, [1, 2]), cfg, ARCH)
    for ca, cb in zip(res_a.checkpoints, res_b.checkpoints):
        assert np.array_equal(ca.params.flatten(), cb.params.flatten())


def test_checkpoint_round_trip(tmp_path, rng):
    vec = rng.normal(size=N)
    ckpt = Checkpoint(_params_from(vec), period_id=4, train_sample_count=321,
                      train_wall_clock=1.5)
    path = tmp_path / "t4.ckpt"
    save_checkpoint(path, ckpt)
    loaded = load_checkpoint(path)
    assert np.array_equal(loaded.params.flatten(), vec)
    assert loaded.period_id == 4
    assert loaded.train_sample_count == 321
    assert loaded.params.arch == ARCH
    assert loaded.train_wall_clock == 0.0  # timing is not persisted


def test_checkpoint_files_reproducible(tmp_path, rng):
    vec = rng.normal(size=N)
    first = tmp_path / "a.ckpt"
    second = tmp_path / "b.ckpt"
    save_checkpoint(first, Checkpoint(_params_from(vec), 1, 10, 0.123))
    save_checkpoint(second, Checkpoint(_params_from(vec), 1, 10, 99.9))
    assert first.read_bytes() == second.read_bytes()


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(AggregationError):
        load_checkpoint(path)
