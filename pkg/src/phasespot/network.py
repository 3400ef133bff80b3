"""Three-stream shallow CNN scoring per-frame motion likelihood.

Architecture: each input channel feeds its own stream of a 3x3 same-padding
convolution (stride 1) followed by ReLU and 6x6/stride-6 max pooling, with
3, 5 and 8 filters on the u, v and magnitude streams.  The pooled maps
concatenate to 5x5x16 = 400 features, which pass through a 400-unit ReLU
fully connected layer and a linear output unit.  Total 160,961 parameters.

Plain numpy throughout: training is deterministic for a given seed, and with
float64 inputs the analytic gradients can be checked against finite
differences.  The compute dtype follows the input arrays; training defaults
to float32, which is what the weights file stores anyway.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .config import TrainConfig
from .errors import DataError
from .io import MEAnnotation

STREAM_FILTERS = (3, 5, 8)
INPUT_SHAPE = (30, 30, 3)
POOL = 6
POOLED = INPUT_SHAPE[0] // POOL  # 5
FLAT = POOLED * POOLED * sum(STREAM_FILTERS)  # 400
HIDDEN = 400

WEIGHTS_MAGIC = b"RMESNET1"
WEIGHTS_VERSION = 1


@dataclass
class Weights:
    """All learnable parameters.

    Serialization order: for each stream its filters (C-order) then biases,
    then fc1 weights (row-major), fc1 biases, fc2 weights, fc2 bias.
    """

    conv_w: list[np.ndarray]  # [(F, 3, 3)] per stream
    conv_b: list[np.ndarray]  # [(F,)] per stream
    fc1_w: np.ndarray         # (400, 400)
    fc1_b: np.ndarray         # (400,)
    fc2_w: np.ndarray         # (400,)
    fc2_b: float

    def param_count(self) -> int:
        n = sum(w.size + b.size for w, b in zip(self.conv_w, self.conv_b))
        return n + self.fc1_w.size + self.fc1_b.size + self.fc2_w.size + 1

    def flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.conv_w, self.conv_b):
            parts += [w.ravel(), b.ravel()]
        parts += [self.fc1_w.ravel(), self.fc1_b.ravel(), self.fc2_w.ravel(),
                  np.array([self.fc2_b], dtype=self.fc2_w.dtype)]
        return np.concatenate(parts)

    def with_flat(self, values: np.ndarray) -> "Weights":
        out = init_weights(0, dtype=values.dtype)
        pos = 0
        for i, (w, b) in enumerate(zip(self.conv_w, self.conv_b)):
            out.conv_w[i] = values[pos:pos + w.size].reshape(w.shape).copy(); pos += w.size
            out.conv_b[i] = values[pos:pos + b.size].copy(); pos += b.size
        out.fc1_w = values[pos:pos + self.fc1_w.size].reshape(self.fc1_w.shape).copy()
        pos += self.fc1_w.size
        out.fc1_b = values[pos:pos + HIDDEN].copy(); pos += HIDDEN
        out.fc2_w = values[pos:pos + FLAT].copy(); pos += FLAT
        out.fc2_b = float(values[pos]); pos += 1
        assert pos == len(values)
        return out


@dataclass
class TrainResult:
    weights: Weights
    epoch_losses: list[float] = field(default_factory=list)


def init_weights(seed: int, dtype=np.float64) -> Weights:
    """Fan-in-scaled uniform initialization, biases zero, deterministic per seed."""
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape).astype(dtype)

    conv_w = [uniform((f, 3, 3), 9) for f in STREAM_FILTERS]
    conv_b = [np.zeros(f, dtype=dtype) for f in STREAM_FILTERS]
    return Weights(
        conv_w=conv_w,
        conv_b=conv_b,
        fc1_w=uniform((HIDDEN, FLAT), FLAT),
        fc1_b=np.zeros(HIDDEN, dtype=dtype),
        fc2_w=uniform((FLAT,), FLAT),
        fc2_b=0.0,
    )


def _check_input(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.dtype not in (np.float32, np.float64):
        x = x.astype(np.float64)
    if x.ndim == 3:
        x = x[None]
    if x.ndim != 4 or x.shape[1:] != INPUT_SHAPE:
        raise ValueError(f"expected input of shape (N,) + {INPUT_SHAPE}, got {x.shape}")
    return x


def _conv_patches(channel: np.ndarray) -> np.ndarray:
    padded = np.pad(channel, ((0, 0), (1, 1), (1, 1)))
    patches = sliding_window_view(padded, (3, 3), axis=(1, 2))  # (N, 30, 30, 3, 3)
    n = channel.shape[0]
    return np.ascontiguousarray(patches).reshape(n * 30 * 30, 9)


def _forward_full(x: np.ndarray, w: Weights):
    n = x.shape[0]
    cache = {"patches": [], "conv_act": [], "pooled": []}
    pooled_streams = []
    for s, (cw, cb) in enumerate(zip(w.conv_w, w.conv_b)):
        f = cw.shape[0]
        patches = _conv_patches(x[..., s])  # (N*900, 9)
        pre = (patches @ cw.reshape(f, 9).T).reshape(n, 30, 30, f) + cb
        act = np.maximum(pre, 0.0)
        pooled = act.reshape(n, POOLED, POOL, POOLED, POOL, f).max(axis=(2, 4))
        cache["patches"].append(patches)
        cache["conv_act"].append(act)
        cache["pooled"].append(pooled)
        pooled_streams.append(pooled)
    concat = np.concatenate(pooled_streams, axis=-1)  # (N, 5, 5, 16)
    flat = concat.reshape(n, FLAT)
    fc1_pre = flat @ w.fc1_w.T + w.fc1_b
    fc1_act = np.maximum(fc1_pre, 0.0)
    scores = fc1_act @ w.fc2_w + w.fc2_b
    cache.update(flat=flat, fc1_pre=fc1_pre, fc1_act=fc1_act)
    return scores, cache


def forward(x: np.ndarray, w: Weights) -> np.ndarray | float:
    """Score one 30x30x3 map (returns a float) or a stacked batch (returns (N,))."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 3
    scores, _ = _forward_full(_check_input(arr), w)
    return float(scores[0]) if single else scores


def _backward(x: np.ndarray, w: Weights, cache, dscores: np.ndarray) -> Weights:
    n = x.shape[0]
    grads = Weights(
        conv_w=[np.zeros_like(cw) for cw in w.conv_w],
        conv_b=[np.zeros_like(cb) for cb in w.conv_b],
        fc1_w=np.zeros_like(w.fc1_w),
        fc1_b=np.zeros_like(w.fc1_b),
        fc2_w=np.zeros_like(w.fc2_w),
        fc2_b=0.0,
    )
    grads.fc2_w = cache["fc1_act"].T @ dscores
    grads.fc2_b = float(dscores.sum())
    dfc1_act = np.outer(dscores, w.fc2_w)
    dfc1_pre = dfc1_act * (cache["fc1_pre"] > 0)
    grads.fc1_w = dfc1_pre.T @ cache["flat"]
    grads.fc1_b = dfc1_pre.sum(axis=0)
    dflat = dfc1_pre @ w.fc1_w
    dconcat = dflat.reshape(n, POOLED, POOLED, sum(STREAM_FILTERS))
    offset = 0
    for s, f in enumerate(STREAM_FILTERS):
        dpooled = dconcat[..., offset:offset + f]
        offset += f
        act = cache["conv_act"][s]
        windows = act.reshape(n, POOLED, POOL, POOLED, POOL, f)
        pooled = cache["pooled"][s][:, :, None, :, None, :]
        # Route the pool gradient to the window maxima; exact ties share it,
        # which matters only for post-ReLU zeros whose gradient dies anyway.
        mask = windows == pooled
        counts = mask.sum(axis=(2, 4), keepdims=True).astype(act.dtype)
        dwindows = mask * (dpooled[:, :, None, :, None, :] / counts)
        dact = dwindows.reshape(n, 30, 30, f)
        dpre = dact * (act > 0)
        flat_dpre = dpre.reshape(n * 30 * 30, f)
        grads.conv_w[s] = (flat_dpre.T @ cache["patches"][s]).reshape(f, 3, 3)
        grads.conv_b[s] = dpre.sum(axis=(0, 1, 2))
    return grads


def mse_loss_and_grads(x: np.ndarray, targets: np.ndarray, w: Weights
                       ) -> tuple[float, Weights]:
    """Mean squared error over the batch and its gradients w.r.t. all parameters."""
    x = _check_input(x)
    targets = np.asarray(targets, dtype=x.dtype).ravel()
    scores, cache = _forward_full(x, w)
    residual = scores - targets
    loss = float(np.mean(residual ** 2))
    dscores = 2.0 * residual / len(residual)
    return loss, _backward(x, w, cache, dscores)


def make_labels(annotations: list[MEAnnotation], span: int, total_frames: int
                ) -> np.ndarray:
    """Binary labels for frames span..total_frames-1.

    A frame is positive when the closed interval [i - span, i] it summarizes
    overlaps some annotated interval with IoU >= 0.5.
    """
    if span < 1:
        raise ValueError("span must be >= 1")
    if total_frames <= span:
        raise ValueError("total_frames must exceed span")
    labels = np.zeros(total_frames - span, dtype=np.int8)
    if not annotations:
        return labels
    intervals = [a.interval for a in annotations]
    for pos, i in enumerate(range(span, total_frames)):
        lo, hi = float(i - span), float(i)
        best = 0.0
        for a0, a1 in intervals:
            inter = min(hi, a1) - max(lo, a0)
            if inter <= 0:
                continue
            union = max(hi, a1) - min(lo, a0)
            best = max(best, inter / union)
        if best >= 0.5:
            labels[pos] = 1
    return labels


def _oversample(labels: np.ndarray, target_ratio: float) -> np.ndarray:
    """Indices with positives replicated toward target positives:negatives ratio."""
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if len(pos) == 0 or len(neg) == 0:
        return np.arange(len(labels))
    repeats = max(1, int(round(target_ratio * len(neg) / len(pos))))
    return np.concatenate([neg, np.tile(pos, repeats)])


def train(features: np.ndarray, labels: np.ndarray, cfg=None,
          init: Weights | None = None, dtype=np.float32) -> TrainResult:
    """Mini-batch SGD with momentum on the MSE loss.

    Deterministic for a given config seed.  Positives are oversampled toward
    the configured positives:negatives ratio since micro-expressions are
    rare.  A single-class training set triggers a warning but still trains.
    Training runs in float32 by default; the weights file stores float32
    regardless.
    """
    cfg = cfg or TrainConfig()
    x = _check_input(features).astype(dtype, copy=False)
    y = np.asarray(labels, dtype=dtype).ravel()
    if len(x) != len(y) or len(x) == 0:
        raise ValueError("features and labels must align and be nonempty")
    if len(np.unique(y)) < 2:
        warnings.warn("training set contains a single class", stacklevel=2)
    rng = np.random.default_rng(cfg.seed)
    w = init if init is not None else init_weights(cfg.seed, dtype=dtype)
    velocity = np.zeros(w.param_count(), dtype=dtype)
    indices = _oversample(y.astype(np.int8), cfg.positive_oversample_ratio)
    losses = []
    for _ in range(cfg.epochs):
        order = rng.permutation(indices)
        batch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grads = mse_loss_and_grads(x[batch], y[batch], w)
            velocity = cfg.momentum * velocity - cfg.learning_rate * grads.flat()
            w = w.with_flat(w.flat() + velocity)
            batch_losses.append(loss)
        losses.append(float(np.mean(batch_losses)))
    return TrainResult(weights=w, epoch_losses=losses)


def model_cost() -> dict[str, int]:
    """Parameter count and forward FLOPs (multiply-accumulates times two)."""
    conv_macs = 9 * INPUT_SHAPE[0] * INPUT_SHAPE[1] * sum(STREAM_FILTERS)
    fc_macs = HIDDEN * FLAT + FLAT
    params = sum(f * 9 + f for f in STREAM_FILTERS) + HIDDEN * FLAT + HIDDEN + FLAT + 1
    return {
        "parameters": params,
        "flops": 2 * (conv_macs + fc_macs),
        "conv_macs": conv_macs,
        "fc_macs": fc_macs,
    }


def save_weights(w: Weights, path: str | Path) -> None:
    values = w.flat().astype("<f4")
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("B", WEIGHTS_VERSION))
        fh.write(values.tobytes())


def load_weights(path: str | Path) -> Weights:
    data = Path(path).read_bytes()
    if len(data) < 9 or data[:8] != WEIGHTS_MAGIC:
        raise DataError(f"{path}: bad weights magic")
    if data[8] != WEIGHTS_VERSION:
        raise DataError(f"{path}: unsupported weights version {data[8]}")
    values = np.frombuffer(data[9:], dtype="<f4").astype(np.float32)
    expected = model_cost()["parameters"]
    if len(values) != expected:
        raise DataError(
            f"{path}: expected {expected} parameters, found {len(values)}")
    if not np.all(np.isfinite(values)):
        raise DataError(f"{path}: weights contain non-finite values")
    return init_weights(0).with_flat(values)
