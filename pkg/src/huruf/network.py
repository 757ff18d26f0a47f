"""The full recognition network: spec, parameter container, forward, backward.

The architecture is four identical blocks (conv 3x3 -> activation ->
batchnorm -> 2x2 maxpool -> dropout) with 16/34/64/128 filters, global
average pooling, and a dense softmax head sized 10 (digits) or 28
(letters). On 64x64 input the spatial chain is 64 -> 32 -> 16 -> 8 -> 4,
so the head sees 128 features.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import layers as L
from .errors import ParameterError, ShapeError, StateError

DEFAULT_FILTERS = (16, 34, 64, 128)


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of the network stack."""

    num_classes: int
    side: int = 64
    conv_filters: tuple[int, ...] = DEFAULT_FILTERS
    activation: str = "relu"
    dropout_rate: float = 0.2
    bn_momentum: float = 0.99
    bn_epsilon: float = 1e-3

    def __post_init__(self):
        if self.num_classes < 2:
            raise ParameterError("need at least two output classes")
        if not self.conv_filters or any(f < 1 for f in self.conv_filters):
            raise ParameterError("conv_filters must be positive")
        if self.activation not in L.ACTIVATION_KINDS:
            raise ParameterError(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ParameterError("dropout rate must lie in [0, 1)")
        if self.side % (2 ** len(self.conv_filters)) != 0:
            raise ShapeError(
                f"side {self.side} is not divisible by 2^{len(self.conv_filters)} "
                "(one 2x halving per block)"
            )

    def shape_chain(self) -> list[tuple]:
        """Activation shapes (h, w, c) after every block, then feature widths."""
        chain: list[tuple] = [(self.side, self.side, 1)]
        s, c = self.side, 1
        for f in self.conv_filters:
            chain.append((s, s, f))  # after conv (same padding)
            s //= 2
            chain.append((s, s, f))  # after pool
            c = f
        chain.append((c,))  # after GAP
        chain.append((self.num_classes,))
        return chain

    @property
    def feature_dim(self) -> int:
        return self.conv_filters[-1]

    def with_activation(self, kind: str) -> "ModelSpec":
        return replace(self, activation=kind)


def digits_spec(side: int = 64) -> ModelSpec:
    return ModelSpec(num_classes=10, side=side)


def letters_spec(side: int = 64) -> ModelSpec:
    return ModelSpec(num_classes=28, side=side)


@dataclass
class Param:
    """A named trainable array; optimizers update ``value`` in place."""

    name: str
    value: np.ndarray


class Model:
    """Parameter container plus forward/backward over the block stack.

    Construct with zero-ish defaults and overwrite via an initializer
    (see ``training.init_params``) or a loaded weight blob.
    """

    def __init__(self, spec: ModelSpec, dtype=np.float32):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        self.blocks: list[tuple[L.ConvParams, L.BatchNormParams]] = []
        in_ch = 1
        for f in spec.conv_filters:
            conv = L.ConvParams(
                kernels=np.zeros((f, 3, 3, in_ch), dtype=dtype),
                bias=np.zeros(f, dtype=dtype),
            )
            bn = L.BatchNormParams(
                gamma=np.ones(f, dtype=dtype),
                beta=np.zeros(f, dtype=dtype),
                running_mean=np.zeros(f, dtype=dtype),
                running_var=np.ones(f, dtype=dtype),
                momentum=spec.bn_momentum,
                epsilon=spec.bn_epsilon,
            )
            self.blocks.append((conv, bn))
            in_ch = f
        self.dense = L.DenseParams(
            weights=np.zeros((spec.feature_dim, spec.num_classes), dtype=dtype),
            bias=np.zeros(spec.num_classes, dtype=dtype),
        )
        self._caches = None
        self._probs = None
        self._onehot_dim = spec.num_classes
        # sanity: the declared chain must close on the head
        chain = spec.shape_chain()
        assert chain[-2] == (spec.feature_dim,) and chain[-1] == (spec.num_classes,)

    def parameters(self) -> list[Param]:
        out = []
        for i, (conv, bn) in enumerate(self.blocks):
            out.append(Param(f"block{i}.conv.kernels", conv.kernels))
            out.append(Param(f"block{i}.conv.bias", conv.bias))
            out.append(Param(f"block{i}.bn.gamma", bn.gamma))
            out.append(Param(f"block{i}.bn.beta", bn.beta))
        out.append(Param("dense.weights", self.dense.weights))
        out.append(Param("dense.bias", self.dense.bias))
        return out

    def param_count(self) -> int:
        return sum(p.value.size for p in self.parameters())

    def forward(self, x, mode: str = "eval", rng: np.random.Generator | None = None,
                update_running: bool = True) -> np.ndarray:
        """Run the stack and return class probabilities (batch, classes).

        Train mode records per-layer caches for a subsequent ``backward``.
        """
        x = np.asarray(x.data if hasattr(x, "data") and not isinstance(x, np.ndarray) else x)
        if x.dtype != self.dtype:
            x = x.astype(self.dtype)
        caches = []
        for conv, bn in self.blocks:
            x, c_conv = L.conv2d_forward(x, conv)
            x, c_act = L.activation_forward(x, self.spec.activation)
            x, c_bn = L.batchnorm_forward(x, bn, mode, update_running=update_running)
            x, c_pool = L.maxpool_forward(x)
            x, c_drop = L.dropout_forward(x, self.spec.dropout_rate, mode, rng)
            caches.append((c_conv, c_act, c_bn, c_pool, c_drop))
        feats, c_gap = L.gap_forward(x)
        logits, c_dense = L.dense_forward(feats, self.dense)
        probs = L.softmax(logits)
        if mode == "train":
            self._caches = (caches, c_gap, c_dense)
            self._probs = probs
        return probs

    def backward(self, y_onehot) -> dict[str, np.ndarray]:
        """Gradients of the mean cross-entropy loss for every parameter.

        Consumes the records stored by the last train-mode forward.
        """
        if self._caches is None:
            raise StateError("backward called without a matching train-mode forward")
        caches, c_gap, c_dense = self._caches
        self._caches = None
        probs, self._probs = self._probs, None
        grads: dict[str, np.ndarray] = {}
        d = L.softmax_ce_grad(probs, y_onehot)
        d, dw, db = L.dense_backward(d, c_dense, self.dense)
        grads["dense.weights"] = dw
        grads["dense.bias"] = db
        d = L.gap_backward(d, c_gap)
        for i in range(len(self.blocks) - 1, -1, -1):
            c_conv, c_act, c_bn, c_pool, c_drop = caches[i]
            d = L.dropout_backward(d, c_drop)
            d = L.maxpool_backward(d, c_pool)
            d, dgamma, dbeta = L.batchnorm_backward(d, c_bn)
            grads[f"block{i}.bn.gamma"] = dgamma
            grads[f"block{i}.bn.beta"] = dbeta
            d = L.activation_backward(d, c_act)
            d, dk, dbias = L.conv2d_backward(d, c_conv)
            grads[f"block{i}.conv.kernels"] = dk
            grads[f"block{i}.conv.bias"] = dbias
        return grads


def backward_pass(model: Model, batch_x, batch_y_onehot,
                  rng: np.random.Generator | None = None) -> dict[str, np.ndarray]:
    """Convenience: train-mode forward immediately followed by backward."""
    model.forward(batch_x, mode="train", rng=rng)
    return model.backward(batch_y_onehot)
