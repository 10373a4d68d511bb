"""Minimal stacked-LSTM classifier with hand-rolled backpropagation.

The model is a fixed graph: ``seq_len`` timesteps through ``hidden_layers``
LSTM layers (standard input/forget/cell/output gates), then a dense softmax
head on the last hidden state. Everything is plain numpy, double precision by
default so gradients can be checked against finite differences.

Determinism contract: every function here is a pure function of its inputs
plus the seeds carried in the configs. Shuffling uses per-epoch generators
derived from ``TrainConfig.seed``, so identical inputs give bit-identical
outputs across runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledData
from .errors import ConfigError, DataError, LabelError, ShapeError
from .seeds import rng_for

OPTIMIZERS = ("adam", "sgd")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class ModelArch:
    """Shape of the classifier: LSTM stack plus dense softmax output."""

    input_dim: int = 45
    hidden_layers: int = 5
    hidden_units: int = 128
    output_dim: int = 6
    seq_len: int = 1

    def __post_init__(self):
        for name in ("input_dim", "hidden_layers", "hidden_units", "output_dim", "seq_len"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"arch.{name} must be a positive integer, got {value!r}")
        if self.output_dim < 2:
            raise ConfigError("arch.output_dim must be at least 2")

    @property
    def layer_input_dims(self) -> tuple[int, ...]:
        return (self.input_dim,) + (self.hidden_units,) * (self.hidden_layers - 1)

    @property
    def feature_width(self) -> int:
        return self.input_dim * self.seq_len


def param_count(arch: ModelArch) -> int:
    """Total number of scalar parameters, a pure function of the arch."""
    h = arch.hidden_units
    total = sum(4 * h * (d + h + 1) for d in arch.layer_input_dims)
    return total + arch.output_dim * (h + 1)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 16
    local_epochs: int = 100
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.local_epochs < 1:
            raise ConfigError("local_epochs must be at least 1")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ModelParams:
    """All weight tensors of one model.

    Per LSTM layer: ``wx`` (layer_input, 4H) input weights, ``wh`` (H, 4H)
    recurrent weights and ``b`` (4H,) bias, gate order (input, forget, cell,
    output). Output head: ``w_out`` (H, C) and ``b_out`` (C,).

    Instances returned by public functions are immutable (arrays are marked
    read-only); treat them as values.
    """

    arch: ModelArch
    wx: tuple[np.ndarray, ...]
    wh: tuple[np.ndarray, ...]
    b: tuple[np.ndarray, ...]
    w_out: np.ndarray
    b_out: np.ndarray

    @property
    def dtype(self) -> np.dtype:
        return self.w_out.dtype

    def tensors(self) -> list[np.ndarray]:
        """Canonical tensor order used by flatten/unflatten."""
        out: list[np.ndarray] = []
        for layer in range(self.arch.hidden_layers):
            out.extend((self.wx[layer], self.wh[layer], self.b[layer]))
        out.extend((self.w_out, self.b_out))
        return out

    def flatten(self) -> np.ndarray:
        return np.concatenate([t.ravel() for t in self.tensors()])

    @staticmethod
    def _pack(arch: ModelArch, tensors: list[np.ndarray], freeze: bool = True) -> "ModelParams":
        if freeze:
            tensors = [_freeze(t) for t in tensors]
        n_layers = arch.hidden_layers
        wx = tuple(tensors[3 * i] for i in range(n_layers))
        wh = tuple(tensors[3 * i + 1] for i in range(n_layers))
        b = tuple(tensors[3 * i + 2] for i in range(n_layers))
        return ModelParams(arch=arch, wx=wx, wh=wh, b=b,
                           w_out=tensors[-2], b_out=tensors[-1])


def tensor_shapes(arch: ModelArch) -> list[tuple[int, ...]]:
    h = arch.hidden_units
    shapes: list[tuple[int, ...]] = []
    for d in arch.layer_input_dims:
        shapes.extend([(d, 4 * h), (h, 4 * h), (4 * h,)])
    shapes.extend([(h, arch.output_dim), (arch.output_dim,)])
    return shapes


def unflatten(arch: ModelArch, flat: np.ndarray) -> ModelParams:
    """Inverse of ``ModelParams.flatten``; round-trips bit-exactly."""
    flat = np.asarray(flat)
    if flat.ndim != 1 or flat.size != param_count(arch):
        raise ShapeError(
            f"flat vector of length {flat.size} does not match arch "
            f"(expected {param_count(arch)})"
        )
    tensors = []
    offset = 0
    for shape in tensor_shapes(arch):
        size = int(np.prod(shape))
        tensors.append(flat[offset:offset + size].reshape(shape).copy())
        offset += size
    return ModelParams._pack(arch, tensors)


def init_params(arch: ModelArch, seed: int, dtype=np.float64) -> ModelParams:
    """Deterministic initialization.

    Weights are uniform on (-k, k) with k = 1/sqrt(fan_in). Biases are zero
    except the LSTM forget-gate slice, which starts at 1 so cells keep state
    early in training.
    """
    if dtype not in (np.float32, np.float64):
        raise ConfigError("dtype must be float32 or float64")
    rng = rng_for(seed, "init")
    h = arch.hidden_units
    tensors: list[np.ndarray] = []
    for d in arch.layer_input_dims:
        kx = 1.0 / np.sqrt(d)
        kh = 1.0 / np.sqrt(h)
        tensors.append(rng.uniform(-kx, kx, size=(d, 4 * h)).astype(dtype))
        tensors.append(rng.uniform(-kh, kh, size=(h, 4 * h)).astype(dtype))
        bias = np.zeros(4 * h, dtype=dtype)
        bias[h:2 * h] = 1.0
        tensors.append(bias)
    ko = 1.0 / np.sqrt(h)
    tensors.append(rng.uniform(-ko, ko, size=(h, arch.output_dim)).astype(dtype))
    tensors.append(np.zeros(arch.output_dim, dtype=dtype))
    return ModelParams._pack(arch, tensors)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # piecewise form avoids exp overflow for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood of the true classes."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(len(labels)), labels]
    return float(np.mean(logz - picked))


def forward(params: ModelParams, batch: np.ndarray):
    """Run the network on a batch of rows.

    ``batch`` is (n, input_dim * seq_len); columns are timestep-major, i.e.
    the first ``input_dim`` columns are timestep 0. Returns (logits, cache)
    where the cache holds every intermediate needed by :func:`backward`.
    """
    arch = params.arch
    X = np.asarray(batch, dtype=params.dtype)
    if X.ndim != 2 or X.shape[1] != arch.feature_width:
        raise ShapeError(
            f"batch has {X.shape[1] if X.ndim == 2 else '?'} columns, "
            f"expected input_dim*seq_len = {arch.feature_width}"
        )
    n = X.shape[0]
    h_units = arch.hidden_units
    steps = X.reshape(n, arch.seq_len, arch.input_dim)
    inputs = [steps[:, t, :] for t in range(arch.seq_len)]

    layer_caches = []
    for layer in range(arch.hidden_layers):
        wx, wh, bias = params.wx[layer], params.wh[layer], params.b[layer]
        h = np.zeros((n, h_units), dtype=params.dtype)
        c = np.zeros((n, h_units), dtype=params.dtype)
        cache = {"x": inputs, "h_prev": [], "c_prev": [],
                 "i": [], "f": [], "g": [], "o": [], "tanh_c": []}
        outputs = []
        for t in range(arch.seq_len):
            cache["h_prev"].append(h)
            cache["c_prev"].append(c)
            z = inputs[t] @ wx + h @ wh + bias
            gi = _sigmoid(z[:, :h_units])
            gf = _sigmoid(z[:, h_units:2 * h_units])
            gg = np.tanh(z[:, 2 * h_units:3 * h_units])
            go = _sigmoid(z[:, 3 * h_units:])
            c = gf * c + gi * gg
            tc = np.tanh(c)
            h = go * tc
            cache["i"].append(gi)
            cache["f"].append(gf)
            cache["g"].append(gg)
            cache["o"].append(go)
            cache["tanh_c"].append(tc)
            outputs.append(h)
        layer_caches.append(cache)
        inputs = outputs

    h_last = inputs[-1]
    logits = h_last @ params.w_out + params.b_out
    full_cache = {"layers": layer_caches, "h_last": h_last, "logits": logits, "n": n}
    return logits, full_cache


def backward(params: ModelParams, cache, labels: np.ndarray) -> ModelParams:
    """Gradients of the mean cross-entropy loss w.r.t. every tensor.

    ``cache`` must come from :func:`forward` on the same params. Returns a
    ModelParams-shaped container of gradients.
    """
    arch = params.arch
    n = cache["n"]
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise LabelError(f"labels must be a vector of length {n}")
    if labels.size and (labels.min() < 0 or labels.max() >= arch.output_dim):
        raise LabelError(
            f"label out of range: max {int(labels.max())} for output_dim {arch.output_dim}"
        )

    probs = softmax(cache["logits"])
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n

    g_w_out = cache["h_last"].T @ dlogits
    g_b_out = dlogits.sum(axis=0)

    h_units = arch.hidden_units
    seq_len = arch.seq_len
    # gradient flowing into the hidden outputs of the top layer
    upstream = [np.zeros_like(cache["h_last"]) for _ in range(seq_len)]
    upstream[-1] = dlogits @ params.w_out.T

    g_wx, g_wh, g_b = [], [], []
    for layer in reversed(range(arch.hidden_layers)):
        lc = cache["layers"][layer]
        wx, wh = params.wx[layer], params.wh[layer]
        gwx = np.zeros_like(wx)
        gwh = np.zeros_like(wh)
        gb = np.zeros_like(params.b[layer])
        dxs = [None] * seq_len
        dh_carry = np.zeros((n, h_units), dtype=params.dtype)
        dc_carry = np.zeros((n, h_units), dtype=params.dtype)
        for t in reversed(range(seq_len)):
            dh = upstream[t] + dh_carry
            gi, gf, gg, go = lc["i"][t], lc["f"][t], lc["g"][t], lc["o"][t]
            tc = lc["tanh_c"][t]
            c_prev = lc["c_prev"][t]
            do = dh * tc
            dc = dh * go * (1.0 - tc * tc) + dc_carry
            df = dc * c_prev
            di = dc * gg
            dg = dc * gi
            dc_carry = dc * gf
            dz = np.concatenate(
                [di * gi * (1.0 - gi),
                 df * gf * (1.0 - gf),
                 dg * (1.0 - gg * gg),
                 do * go * (1.0 - go)],
                axis=1,
            )
            gwx += lc["x"][t].T @ dz
            gwh += lc["h_prev"][t].T @ dz
            gb += dz.sum(axis=0)
            dxs[t] = dz @ wx.T
            dh_carry = dz @ wh.T
        upstream = dxs
        g_wx.append(gwx)
        g_wh.append(gwh)
        g_b.append(gb)

    g_wx.reverse()
    g_wh.reverse()
    g_b.reverse()
    tensors: list[np.ndarray] = []
    for layer in range(arch.hidden_layers):
        tensors.extend((g_wx[layer], g_wh[layer], g_b[layer]))
    tensors.extend((g_w_out, g_b_out))
    return ModelParams._pack(arch, tensors)


def predict(params: ModelParams, batch: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """Argmax class per row; ties resolve to the lowest class index."""
    X = np.asarray(batch, dtype=params.dtype)
    if X.ndim != 2 or X.shape[1] != params.arch.feature_width:
        raise ShapeError(
            f"batch has {X.shape[1] if X.ndim == 2 else '?'} columns, "
            f"expected {params.arch.feature_width}"
        )
    out = np.empty(X.shape[0], dtype=np.int64)
    for start in range(0, X.shape[0], chunk):
        logits, _ = forward(params, X[start:start + chunk])
        out[start:start + chunk] = np.argmax(logits, axis=1)
    return out


class _Adam:
    def __init__(self, tensors, lr):
        self.lr = lr
        self.m = [np.zeros_like(t) for t in tensors]
        self.v = [np.zeros_like(t) for t in tensors]
        self.t = 0

    def step(self, tensors, grads):
        self.t += 1
        bc1 = 1.0 - ADAM_BETA1 ** self.t
        bc2 = 1.0 - ADAM_BETA2 ** self.t
        for k, (tensor, grad) in enumerate(zip(tensors, grads)):
            self.m[k] = ADAM_BETA1 * self.m[k] + (1.0 - ADAM_BETA1) * grad
            self.v[k] = ADAM_BETA2 * self.v[k] + (1.0 - ADAM_BETA2) * grad * grad
            m_hat = self.m[k] / bc1
            v_hat = self.v[k] / bc2
            tensor -= self.lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


class _Sgd:
    def __init__(self, tensors, lr):
        self.lr = lr

    def step(self, tensors, grads):
        for tensor, grad in zip(tensors, grads):
            tensor -= self.lr * grad


def train_local(params: ModelParams, data: LabeledData, cfg: TrainConfig):
    """Mini-batch training on one client's shard.

    Runs ``cfg.local_epochs`` epochs with a fresh optimizer state; shuffling
    is a per-epoch permutation from a generator derived from ``cfg.seed``.
    Returns ``(updated_params, sample_count, wall_clock_seconds)``.
    """
    n = len(data)
    if n == 0:
        raise DataError("cannot train on an empty dataset")
    y = np.asarray(data.y)
    if y.min() < 0 or y.max() >= params.arch.output_dim:
        raise LabelError(
            f"label out of range: max {int(y.max())} for output_dim {params.arch.output_dim}"
        )
    X = np.asarray(data.X, dtype=params.dtype)

    start = time.perf_counter()
    tensors = [t.copy() for t in params.tensors()]
    working = ModelParams._pack(params.arch, tensors, freeze=False)
    opt_cls = _Adam if cfg.optimizer == "adam" else _Sgd
    optimizer = opt_cls(tensors, cfg.learning_rate)

    for epoch in range(cfg.local_epochs):
        order = rng_for(cfg.seed, "shuffle", epoch).permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            _, cache = forward(working, X[idx])
            grads = backward(working, cache, y[idx])
            optimizer.step(tensors, grads.tensors())

    updated = ModelParams._pack(params.arch, [t.copy() for t in tensors])
    return updated, n, time.perf_counter() - start
