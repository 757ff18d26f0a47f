"""Forward and backward passes for every layer type in the network.

Each layer is a pair of pure functions:

    out, cache = <layer>_forward(x, ...)
    dx, (param grads...) = <layer>_backward(dout, cache)

Inputs and outputs are numpy arrays in (n, h, w, c) order; dense layers and
the softmax head work on (n, features) matrices. Parameters live in small
mutable dataclasses so the optimizer can update them in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParameterError, ShapeError, StateError

ACTIVATION_KINDS = ("relu", "tanh", "linear")


@dataclass
class ConvParams:
    """3x3 convolution weights: kernels (out_ch, 3, 3, in_ch), bias (out_ch,)."""

    kernels: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        if self.kernels.ndim != 4 or self.kernels.shape[1:3] != (3, 3):
            raise ShapeError(f"kernels must be (out, 3, 3, in), got {self.kernels.shape}")
        if self.bias.shape != (self.kernels.shape[0],):
            raise ShapeError("bias length must equal the kernel output-channel count")

    @property
    def out_channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def in_channels(self) -> int:
        return self.kernels.shape[3]


@dataclass
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.99
    epsilon: float = 1e-3
    initialized: bool = False  # True once running stats hold real data

    def __post_init__(self):
        c = self.gamma.shape[0]
        for name in ("beta", "running_mean", "running_var"):
            if getattr(self, name).shape != (c,):
                raise ShapeError(f"{name} must have length {c}")
        if not 0.0 < self.momentum < 1.0:
            raise ParameterError(f"momentum {self.momentum} must lie in (0, 1)")
        if self.epsilon <= 0.0:
            raise ParameterError("epsilon must be positive")


@dataclass
class DenseParams:
    weights: np.ndarray  # (in_features, out_features)
    bias: np.ndarray  # (out_features,)

    def __post_init__(self):
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[1],):
            raise ShapeError("dense weights (in, out) and bias (out,) are inconsistent")


def _as4d(x) -> np.ndarray:
    arr = x.data if hasattr(x, "data") and not isinstance(x, np.ndarray) else np.asarray(x)
    if arr.ndim != 4:
        raise ShapeError(f"expected a rank-4 input, got rank {arr.ndim}")
    return arr


def conv2d_forward(x, p: ConvParams):
    """Same-padding stride-1 cross-correlation with 3x3 kernels.

    out[n,i,j,o] = bias[o] + sum_{di,dj,ci} x[n, i+di-1, j+dj-1, ci] * k[o,di,dj,ci]
    with zero padding outside the input bounds.
    """
    x = _as4d(x)
    n, h, w, c = x.shape
    if c != p.in_channels:
        raise ShapeError(
            f"input has {c} channels but kernels expect {p.in_channels}"
        )
    xpad = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    # (n, h, w, c, 3, 3) -> (n*h*w, 3*3*c) column matrix for one big matmul
    windows = sliding_window_view(xpad, (3, 3), axis=(1, 2))
    cols = np.ascontiguousarray(windows.transpose(0, 1, 2, 4, 5, 3)).reshape(
        n * h * w, 9 * c
    )
    kmat = p.kernels.transpose(1, 2, 3, 0).reshape(9 * c, p.out_channels)
    out = (cols @ kmat).reshape(n, h, w, p.out_channels) + p.bias
    cache = (cols, kmat, p, x.shape)
    return out, cache


def conv2d_backward(dout, cache):
    cols, kmat, p, xshape = cache
    n, h, w, c = xshape
    o = p.out_channels
    dmat = dout.reshape(n * h * w, o)
    dk = (cols.T @ dmat).reshape(3, 3, c, o).transpose(3, 0, 1, 2)
    db = dmat.sum(axis=0)
    dcols = (dmat @ kmat.T).reshape(n, h, w, 3, 3, c)
    dxpad = np.zeros((n, h + 2, w + 2, c), dtype=dout.dtype)
    for di in range(3):
        for dj in range(3):
            dxpad[:, di : di + h, dj : dj + w, :] += dcols[:, :, :, di, dj, :]
    dx = dxpad[:, 1:-1, 1:-1, :]
    return dx, dk, db


def maxpool_forward(x):
    """2x2 max pooling with stride 2; records the winning index per window."""
    x = _as4d(x)
    n, h, w, c = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"spatial dims must be even for 2x2 pooling, got {h}x{w}")
    blocks = x.reshape(n, h // 2, 2, w // 2, 2, c)
    flat = blocks.transpose(0, 1, 3, 2, 4, 5).reshape(n, h // 2, w // 2, 4, c)
    argmax = flat.argmax(axis=3)
    out = np.take_along_axis(flat, argmax[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    cache = (argmax, x.shape)
    return out, cache


def maxpool_backward(dout, cache):
    argmax, xshape = cache
    n, h, w, c = xshape
    dflat = np.zeros((n, h // 2, w // 2, 4, c), dtype=dout.dtype)
    np.put_along_axis(dflat, argmax[:, :, :, None, :], dout[:, :, :, None, :], axis=3)
    dx = (
        dflat.reshape(n, h // 2, w // 2, 2, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(n, h, w, c)
    )
    return dx


def batchnorm_forward(x, p: BatchNormParams, mode: str, update_running: bool = True):
    """Per-channel normalization over the (n, h, w) axes.

    Train mode normalizes by batch statistics (biased variance) and folds
    them into the running averages; eval mode uses the stored running stats.
    """
    x = _as4d(x)
    if x.shape[3] != p.gamma.shape[0]:
        raise ShapeError(
            f"input has {x.shape[3]} channels but batchnorm expects {p.gamma.shape[0]}"
        )
    if mode == "train":
        mean = x.mean(axis=(0, 1, 2))
        var = x.var(axis=(0, 1, 2))
        if update_running:
            m = p.momentum
            p.running_mean[...] = m * p.running_mean + (1.0 - m) * mean
            p.running_var[...] = m * p.running_var + (1.0 - m) * var
            p.initialized = True
        inv_std = 1.0 / np.sqrt(var + p.epsilon)
        xhat = (x - mean) * inv_std
        out = p.gamma * xhat + p.beta
        cache = (x, mean, inv_std, xhat, p)
        return out, cache
    if mode == "eval":
        if not p.initialized:
            raise StateError("eval-mode batchnorm before running statistics exist")
        inv_std = 1.0 / np.sqrt(p.running_var + p.epsilon)
        out = p.gamma * (x - p.running_mean) * inv_std + p.beta
        return out, None
    raise ParameterError(f"unknown mode {mode!r}")


def batchnorm_backward(dout, cache):
    x, mean, inv_std, xhat, p = cache
    m = float(np.prod([x.shape[0], x.shape[1], x.shape[2]]))
    dgamma = (dout * xhat).sum(axis=(0, 1, 2))
    dbeta = dout.sum(axis=(0, 1, 2))
    dxhat = dout * p.gamma
    # standard batchnorm gradient, all reductions over (n, h, w)
    dvar = (dxhat * (x - mean)).sum(axis=(0, 1, 2)) * (-0.5) * inv_std**3
    dmean = (-inv_std) * dxhat.sum(axis=(0, 1, 2)) + dvar * (-2.0 / m) * (
        x - mean
    ).sum(axis=(0, 1, 2))
    dx = dxhat * inv_std + dvar * 2.0 * (x - mean) / m + dmean / m
    return dx, dgamma, dbeta


def dropout_forward(x, rate: float, mode: str, rng: np.random.Generator | None = None):
    """Inverted dropout: survivors scaled by 1/(1-rate) so eval is identity."""
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate {rate} must lie in [0, 1)")
    x = np.asarray(x)
    if mode == "eval" or rate == 0.0:
        return x, None
    if mode != "train":
        raise ParameterError(f"unknown mode {mode!r}")
    if rng is None:
        raise StateError("train-mode dropout requires a random generator")
    keep = 1.0 - rate
    mask = (rng.random(x.shape) >= rate).astype(x.dtype) / x.dtype.type(keep)
    return x * mask, mask


def dropout_backward(dout, mask):
    return dout if mask is None else dout * mask


def gap_forward(x):
    """Global average pooling: each channel map reduced to its spatial mean."""
    x = _as4d(x)
    out = x.mean(axis=(1, 2))
    return out, x.shape


def gap_backward(dout, xshape):
    n, h, w, c = xshape
    return np.broadcast_to(dout[:, None, None, :] / (h * w), xshape).astype(dout.dtype)


def dense_forward(x, p: DenseParams):
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] != p.weights.shape[0]:
        raise ShapeError(
            f"dense input width {x.shape[-1]} != in_features {p.weights.shape[0]}"
        )
    out = x @ p.weights + p.bias
    return out, x


def dense_backward(dout, cache, p: DenseParams):
    x = cache
    dw = x.T @ dout
    db = dout.sum(axis=0)
    dx = dout @ p.weights.T
    return dx, dw, db


def activation_forward(x, kind: str):
    if kind == "relu":
        out = np.maximum(x, 0)
        return out, (kind, x)
    if kind == "tanh":
        out = np.tanh(x)
        return out, (kind, out)
    if kind == "linear":
        return x, (kind, None)
    raise ParameterError(f"unknown activation {kind!r}")


def activation_backward(dout, cache):
    kind, saved = cache
    if kind == "relu":
        return dout * (saved > 0)
    if kind == "tanh":
        return dout * (1.0 - saved**2)
    return dout


def activation_apply(x, kind: str):
    """Elementwise activation without a backward cache."""
    return activation_forward(np.asarray(x), kind)[0]


def softmax(logits):
    """Row-wise softmax with max subtraction for overflow safety."""
    z = np.asarray(logits)
    if z.ndim != 2 or z.shape[1] < 1:
        raise ShapeError("softmax expects a (batch, classes) matrix")
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_ce_grad(probs, onehot):
    """Gradient of mean cross-entropy w.r.t. the logits: (p - y) / batch."""
    probs = np.asarray(probs)
    onehot = np.asarray(onehot)
    if probs.shape != onehot.shape:
        raise ShapeError("probabilities and one-hot targets must share a shape")
    return (probs - onehot) / probs.shape[0]
