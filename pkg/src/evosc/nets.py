"""Tiny from-scratch neural classifiers over spectra or raw rate signals.

Two architectures, both ending in 2 logits (background, oscillation):

    fc:     input -> dense(hidden) -> ReLU -> dense(2)
            hidden = 144 for 500-long inputs, 160 otherwise
    conv1d: conv(1->16, k=6, s=2) -> ReLU -> conv(16->16, k=6, s=2) -> ReLU
            -> global average pool -> dense(2)

Inputs are expected peak-normalized (see :func:`peak_normalize`). Training
is plain mini-batch Adam on a class-weighted cross-entropy, fully
deterministic given the config seed.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ContractError, ParameterError, TrainingError
from .events import BG, ED

SPECTRUM = "spectrum"
RATE = "rate"
FC = "fc"
CONV1D = "conv1d"

CONV_CHANNELS = 16
CONV_KERNEL = 6
CONV_STRIDE = 2
MODEL_FILE_VERSION = 1


def fc_hidden_size(input_len: int) -> int:
    return 144 if input_len == 500 else 160


def peak_normalize(x) -> np.ndarray:
    """Scale by the peak absolute value; an all-zero input stays all-zero."""
    x = np.asarray(x, dtype=np.float64)
    peak = np.max(np.abs(x)) if x.size else 0.0
    return x / peak if peak > 0 else np.zeros_like(x)


def label_index(label) -> int:
    """Map ED/BG (or 1/0) to the logit index: 0 = BG, 1 = ED."""
    if label in (ED, 1, True):
        return 1
    if label in (BG, 0, False):
        return 0
    raise ParameterError(f"unknown label {label!r}")


@dataclass
class TrainConfig:
    learning_rate: float = 0.003
    batch_size: int = 32
    epochs: int = 50
    class_weights: tuple = (1.0, 1.0)  # (w_bg, w_ed)
    seed: int = 0
    early_stop_patience: int | None = 5  # epochs without train-loss improvement

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ParameterError("learning rate must be positive")
        if self.batch_size < 1:
            raise ParameterError("batch size must be at least 1")
        if min(self.class_weights) <= 0:
            raise ParameterError("class weights must be positive")


class TinyNet:
    """Weights plus forward/backward passes for one of the two architectures."""

    def __init__(self, input_kind, input_len, architecture, seed, params):
        if input_kind not in (SPECTRUM, RATE):
            raise ParameterError(f"unknown input kind {input_kind!r}")
        if architecture not in (FC, CONV1D):
            raise ParameterError(f"unknown architecture {architecture!r}")
        if input_len < 8:
            raise ParameterError("input length must be at least 8")
        self.input_kind = input_kind
        self.input_len = input_len
        self.architecture = architecture
        self.seed = seed
        self.params = params

    @property
    def param_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def param_order(self):
        return sorted(self.params)

    # -- forward -----------------------------------------------------------

    def _check_batch(self, inputs) -> np.ndarray:
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_len:
            raise ContractError(
                f"input length {x.shape[-1]} does not match net input length {self.input_len}"
            )
        return x

    def forward_batch(self, inputs) -> np.ndarray:
        """Logits of shape (batch, 2); column 0 is BG, column 1 is ED."""
        return self._forward_cached(self._check_batch(inputs))[0]

    def forward(self, input) -> tuple:
        """(logit_bg, logit_ed) for a single input sequence."""
        logits = self.forward_batch(np.asarray(input)[None, :] if np.ndim(input) == 1 else input)
        if logits.shape[0] != 1:
            raise ContractError("forward() takes a single input; use forward_batch")
        return float(logits[0, 0]), float(logits[0, 1])

    def predict(self, input) -> str:
        logit_bg, logit_ed = self.forward(input)
        return ED if logit_ed > logit_bg else BG

    def _forward_cached(self, x):
        p = self.params
        if self.architecture == FC:
            z1 = x @ p["w1"] + p["b1"]
            a1 = np.maximum(z1, 0.0)
            logits = a1 @ p["w2"] + p["b2"]
            return logits, {"x": x, "z1": z1, "a1": a1}
        xc = x[:, None, :]
        z1 = _kernels.conv1d_forward(xc, p["w1"], p["b1"], CONV_STRIDE)
        a1 = np.maximum(z1, 0.0)
        z2 = _kernels.conv1d_forward(a1, p["w2"], p["b2"], CONV_STRIDE)
        a2 = np.maximum(z2, 0.0)
        pooled = a2.mean(axis=2)
        logits = pooled @ p["w3"] + p["b3"]
        return logits, {"xc": xc, "z1": z1, "a1": a1, "z2": z2, "a2": a2, "pooled": pooled}

    # -- backward ----------------------------------------------------------

    def _backward(self, cache, dlogits):
        p = self.params
        if self.architecture == FC:
            grads = {
                "w2": cache["a1"].T @ dlogits,
                "b2": dlogits.sum(axis=0),
            }
            da1 = dlogits @ p["w2"].T
            dz1 = da1 * (cache["z1"] > 0)
            grads["w1"] = cache["x"].T @ dz1
            grads["b1"] = dz1.sum(axis=0)
            return grads
        grads = {
            "w3": cache["pooled"].T @ dlogits,
            "b3": dlogits.sum(axis=0),
        }
        dpooled = dlogits @ p["w3"].T
        l2 = cache["a2"].shape[2]
        da2 = np.repeat(dpooled[:, :, None], l2, axis=2) / l2
        dz2 = da2 * (cache["z2"] > 0)
        da1, dw2, db2 = _kernels.conv1d_backward(cache["a1"], p["w2"], dz2, CONV_STRIDE)
        grads["w2"] = dw2
        grads["b2"] = db2
        dz1 = da1 * (cache["z1"] > 0)
        _, dw1, db1 = _kernels.conv1d_backward(cache["xc"], p["w1"], dz1, CONV_STRIDE)
        grads["w1"] = dw1
        grads["b1"] = db1
        return grads

    def copy(self) -> "TinyNet":
        return TinyNet(
            self.input_kind, self.input_len, self.architecture, self.seed,
            {k: v.copy() for k, v in self.params.items()},
        )


def conv_output_len(input_len: int) -> int:
    l1 = (input_len - CONV_KERNEL) // CONV_STRIDE + 1
    return (l1 - CONV_KERNEL) // CONV_STRIDE + 1


def build_tiny_net(input_kind: str, input_len: int, architecture: str, seed: int = 0) -> TinyNet:
    """Deterministically initialize a net: weights uniform in +-1/sqrt(fan_in), zero biases."""
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    if architecture == FC:
        hidden = fc_hidden_size(input_len)
        params = {
            "w1": uniform((input_len, hidden), input_len),
            "b1": np.zeros(hidden),
            "w2": uniform((hidden, 2), hidden),
            "b2": np.zeros(2),
        }
    elif architecture == CONV1D:
        if conv_output_len(input_len) < 1:
            raise ParameterError(f"input length {input_len} too short for two conv layers")
        c, k = CONV_CHANNELS, CONV_KERNEL
        params = {
            "w1": uniform((c, 1, k), 1 * k),
            "b1": np.zeros(c),
            "w2": uniform((c, c, k), c * k),
            "b2": np.zeros(c),
            "w3": uniform((c, 2), c),
            "b3": np.zeros(2),
        }
    else:
        raise ParameterError(f"unknown architecture {architecture!r}")
    return TinyNet(input_kind, input_len, architecture, seed, params)


# ---------------------------------------------------------------------------
# loss and optimizer


def weighted_ce_loss_and_grads(net: TinyNet, x, y_idx, class_weights):
    """Mean class-weighted cross-entropy over a batch plus parameter gradients."""
    x = net._check_batch(x)
    y_idx = np.asarray(y_idx, dtype=np.int64)
    logits, cache = net._forward_cached(x)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    w = np.asarray(class_weights, dtype=np.float64)[y_idx]
    n = x.shape[0]
    loss = float(-(w * log_p[np.arange(n), y_idx]).sum() / n)
    dlogits = np.exp(log_p)
    dlogits[np.arange(n), y_idx] -= 1.0
    dlogits *= w[:, None] / n
    grads = net._backward(cache, dlogits)
    return loss, grads


class Adam:
    """Bias-corrected first/second-moment optimizer (the standard recursion)."""

    def __init__(self, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params: dict, grads: dict):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name in sorted(params):
            g = grads[name]
            m = self.m.get(name)
            if m is None:
                m = np.zeros_like(params[name])
                self.m[name] = m
                self.v[name] = np.zeros_like(params[name])
            v = self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            params[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainResult:
    net: TinyNet
    epoch_losses: list = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1] if self.epoch_losses else float("nan")


def train(net: TinyNet, dataset, config: TrainConfig) -> TrainResult:
    """Mini-batch Adam on weighted cross-entropy; mutates and returns the net.

    The shuffle order is fixed by the config seed, so identical inputs give
    bit-identical weights. Stops early when the epoch loss has not improved
    for ``early_stop_patience`` epochs.
    """
    if not dataset:
        raise ParameterError("training dataset is empty")
    x = np.stack([np.asarray(inp, dtype=np.float64) for inp, _ in dataset])
    y = np.array([label_index(lbl) for _, lbl in dataset], dtype=np.int64)
    if x.shape[1] != net.input_len:
        raise ContractError(
            f"dataset input length {x.shape[1]} does not match net input length {net.input_len}"
        )
    rng = np.random.default_rng(config.seed)
    opt = Adam(config.learning_rate)
    n = x.shape[0]
    result = TrainResult(net=net)
    best = np.inf
    since_best = 0
    for _epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for bi, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            loss, grads = weighted_ce_loss_and_grads(net, x[idx], y[idx], config.class_weights)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss in batch {bi} of epoch {_epoch}")
            opt.step(net.params, grads)
            total += loss * len(idx)
        epoch_loss = total / n
        result.epoch_losses.append(epoch_loss)
        if epoch_loss < best:
            best = epoch_loss
            since_best = 0
        else:
            since_best += 1
            if config.early_stop_patience is not None and since_best >= config.early_stop_patience:
                break
    return result


def inverse_frequency_weights(labels) -> tuple:
    """(w_bg, w_ed) proportional to inverse class frequency, normalized to mean 1."""
    idx = np.array([label_index(l) for l in labels])
    n = len(idx)
    n_ed = int(idx.sum())
    n_bg = n - n_ed
    if n_bg == 0 or n_ed == 0:
        return (1.0, 1.0)
    u = np.array([n / n_bg, n / n_ed])
    w = u / u.mean()
    return (float(w[0]), float(w[1]))


# ---------------------------------------------------------------------------
# model files


def save_model(net: TinyNet, path):
    doc = {
        "version": MODEL_FILE_VERSION,
        "input_kind": net.input_kind,
        "input_len": net.input_len,
        "architecture": net.architecture,
        "seed": net.seed,
        "shapes": {k: list(v.shape) for k, v in sorted(net.params.items())},
        "weights": {k: v.reshape(-1).tolist() for k, v in sorted(net.params.items())},
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path) -> TinyNet:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != MODEL_FILE_VERSION:
        raise ParameterError(
            f"unsupported model file version {doc.get('version')!r} "
            f"(expected {MODEL_FILE_VERSION})"
        )
    params = {}
    for name, shape in doc["shapes"].items():
        flat = np.asarray(doc["weights"][name], dtype=np.float64)
        params[name] = flat.reshape(shape)
    return TinyNet(doc["input_kind"], doc["input_len"], doc["architecture"], doc["seed"], params)
