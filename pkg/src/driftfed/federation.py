"""Federated orchestration: FedAvg rounds, checkpoint chaining, averaging init.

Clients all participate every round. Aggregation order is canonical (client
index), and per-client training seeds derive from (round, client), so a run
is reproducible regardless of how clients would be scheduled.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import LabeledData
from .errors import AggregationError, ConfigError, FederationError
from .nn import ModelArch, ModelParams, TrainConfig, init_params, predict, train_local, unflatten
from .seeds import rng_for
from .timeline import StrategyConfig

AVERAGING_MODES = ("equal", "sample", "ema")

_INIT_MODE_BY_KIND = {"avg_equal": "equal", "avg_sample": "sample", "avg_ema": "ema"}


@dataclass(frozen=True)
class FedConfig:
    num_clients: int = 5
    rounds: int = 15
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0

    def __post_init__(self):
        if self.num_clients < 1:
            raise ConfigError("num_clients must be at least 1")
        if self.rounds < 1:
            raise ConfigError("rounds must be at least 1")


@dataclass(frozen=True)
class Checkpoint:
    """Final global parameters of one training period."""

    params: ModelParams
    period_id: int
    train_sample_count: int
    train_wall_clock: float


def fedavg_aggregate(client_params: list[ModelParams],
                     client_sizes: list[int]) -> ModelParams:
    """Element-wise mean weighted by client data size."""
    if not client_params or len(client_params) != len(client_sizes):
        raise AggregationError("need matching, non-empty params and size lists")
    arch = client_params[0].arch
    for p in client_params[1:]:
        if p.arch != arch:
            raise AggregationError("client architectures differ")
    total = float(sum(client_sizes))
    if total <= 0:
        raise AggregationError("total client size must be positive")
    acc = np.zeros_like(client_params[0].flatten())
    for params, size in zip(client_params, client_sizes):
        acc += (size / total) * params.flatten()
    return unflatten(arch, acc)


def run_round(global_params: ModelParams, client_train: list[LabeledData],
              cfg: FedConfig, round_index: int = 0):
    """One communication round: broadcast, local training, FedAvg.

    Returns ``(new_global, per_client_seconds)``. Deterministic: client k's
    shuffles derive from (cfg.seed, round_index, k).
    """
    for k, shard in enumerate(client_train):
        if len(shard) == 0:
            raise FederationError(f"client {k} has an empty training shard")
    results = []
    seconds = []
    for k, shard in enumerate(client_train):
        seed = int(rng_for(cfg.seed, "round", round_index, "client", k).integers(0, 2**63 - 1))
        local_cfg = TrainConfig(
            learning_rate=cfg.train.learning_rate, batch_size=cfg.train.batch_size,
            local_epochs=cfg.train.local_epochs, optimizer=cfg.train.optimizer,
            seed=seed,
        )
        params, n, secs = train_local(global_params, shard, local_cfg)
        results.append((params, n))
        seconds.append(secs)
    new_global = fedavg_aggregate([p for p, _ in results], [n for _, n in results])
    return new_global, seconds


def init_from_history(mode: str, history: list[Checkpoint],
                      ema_alpha: float = 0.6) -> ModelParams:
    """Parameter average over previous period checkpoints.

    equal: unweighted mean. sample: weighted by training sample count.
    ema: e_1 = params_1, e_k = alpha*params_k + (1-alpha)*e_{k-1}.
    """
    if mode not in AVERAGING_MODES:
        raise ConfigError(f"mode must be one of {AVERAGING_MODES}")
    if not history:
        raise AggregationError("history must contain at least one checkpoint")
    arch = history[0].params.arch
    for ckpt in history[1:]:
        if ckpt.params.arch != arch:
            raise AggregationError("checkpoint architectures differ")
    if len(history) == 1:
        return history[0].params
    flats = [c.params.flatten() for c in history]
    if mode == "equal":
        merged = np.mean(flats, axis=0)
    elif mode == "sample":
        weights = np.array([c.train_sample_count for c in history], dtype=float)
        if weights.sum() <= 0:
            raise AggregationError("sample counts must be positive for sample weighting")
        merged = np.average(flats, axis=0, weights=weights)
    else:
        merged = flats[0]
        for flat in flats[1:]:
            merged = ema_alpha * flat + (1.0 - ema_alpha) * merged
    return unflatten(arch, merged)


@dataclass
class RoundLog:
    period_id: int
    round_index: int
    val_accuracy: float | None


@dataclass
class TimelineResult:
    checkpoints: list[Checkpoint]
    round_logs: list[RoundLog]
    initial_params: dict[int, ModelParams]  # per period, for chaining audits


@dataclass
class PeriodInput:
    """Encoded shards for one training period."""

    period_id: int
    client_train: list[LabeledData]
    client_val: list[LabeledData]


def run_timeline(strategy: StrategyConfig, period_inputs: list[PeriodInput],
                 cfg: FedConfig, arch: ModelArch) -> TimelineResult:
    """Train across periods with checkpoint chaining.

    The first period starts from fresh initialization; later periods start
    from the previous checkpoint, except the averaging variants, which start
    from a parameter average over all previous checkpoints. Validation
    accuracy is recorded after every round but never gates training.
    """
    checkpoints: list[Checkpoint] = []
    logs: list[RoundLog] = []
    initials: dict[int, ModelParams] = {}
    mode = _INIT_MODE_BY_KIND.get(strategy.kind)

    for item in sorted(period_inputs, key=lambda p: p.period_id):
        if not checkpoints:
            params = init_params(arch, seed=int(
                rng_for(cfg.seed, "model-init").integers(0, 2**63 - 1)))
        elif mode is not None:
            params = init_from_history(mode, checkpoints,
                                       ema_alpha=strategy.ema_alpha or 0.6)
        else:
            params = checkpoints[-1].params
        initials[item.period_id] = params

        val = _concat_nonempty(item.client_val)
        wall = 0.0
        for rnd in range(cfg.rounds):
            tick = time.perf_counter()
            params, _ = run_round(params, item.client_train, cfg,
                                  round_index=item.period_id * 1000 + rnd)
            wall += time.perf_counter() - tick
            acc = None
            if val is not None:
                acc = float(np.mean(predict(params, val.X) == val.y))
            logs.append(RoundLog(item.period_id, rnd, acc))

        sample_count = sum(len(s) for s in item.client_train)
        checkpoints.append(Checkpoint(params, item.period_id, sample_count, wall))

    return TimelineResult(checkpoints, logs, initials)


def _concat_nonempty(shards: list[LabeledData]) -> LabeledData | None:
    parts = [s for s in shards if len(s) > 0]
    if not parts:
        return None
    return LabeledData.concat(parts)


# --- checkpoint persistence -------------------------------------------------
#
# Byte layout (version 1, little-endian):
#   bytes 0..7   magic b"DRIFTCKP"
#   bytes 8..11  format version, uint32
#   bytes 12..15 header length H, uint32
#   bytes 16..16+H  UTF-8 JSON header: arch fields, period_id,
#                   train_sample_count, param dtype and count
#   remainder    parameter vector, float64, canonical flatten order
#
# Timing is intentionally not stored: checkpoint files are byte-reproducible
# for identical runs. Wall-clock figures live in the latency report and the
# run manifest.

CHECKPOINT_MAGIC = b"DRIFTCKP"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    arch = ckpt.params.arch
    flat = np.ascontiguousarray(ckpt.params.flatten(), dtype="<f8")
    header = json.dumps({
        "arch": {
            "input_dim": arch.input_dim, "hidden_layers": arch.hidden_layers,
            "hidden_units": arch.hidden_units, "output_dim": arch.output_dim,
            "seq_len": arch.seq_len,
        },
        "period_id": ckpt.period_id,
        "train_sample_count": ckpt.train_sample_count,
        "dtype": "float64",
        "param_count": int(flat.size),
    }, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(header)))
        fh.write(header)
        fh.write(flat.tobytes())


def load_checkpoint(path) -> Checkpoint:
    """Restore a persisted checkpoint (wall clock is not persisted; it loads as 0)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != CHECKPOINT_MAGIC:
        raise AggregationError(f"{path}: not a checkpoint file")
    version, header_len = struct.unpack("<II", blob[8:16])
    if version != CHECKPOINT_VERSION:
        raise AggregationError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(blob[16:16 + header_len].decode("utf-8"))
    arch = ModelArch(**header["arch"])
    flat = np.frombuffer(blob[16 + header_len:], dtype="<f8")
    if flat.size != header["param_count"]:
        raise AggregationError(f"{path}: parameter payload truncated")
    params = unflatten(arch, flat.astype(np.float64))
    return Checkpoint(params, header["period_id"], header["train_sample_count"], 0.0)
