"""Initialization, loss, optimizers, the epoch loop, and the hyperparameter grid.

The grid is the full cartesian product of 4 optimizers x 2 initializers x
3 activations = 24 combinations, each trained for a short probe run and
ranked by validation accuracy. Completed combinations are checkpointed as
JSON lines so an interrupted grid resumes where it stopped.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import product

import numpy as np

from .data import Dataset, batch_iter, one_hot, subset
from .errors import NumericError, ParameterError, ShapeError, TrainingError
from .network import Model, ModelSpec, Param

log = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "rmsprop", "nadam", "adagrad")
INITIALIZERS = ("uniform", "normal")
ACTIVATIONS = ("relu", "tanh", "linear")

INIT_SCALE = 0.05  # uniform bound / normal standard deviation


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    initializer: str = "uniform"
    activation: str = "relu"
    epochs: int = 20
    batch_size: int = 20
    learning_rate: float = 0.001
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ParameterError(f"unknown optimizer {self.optimizer!r}")
        if self.initializer not in INITIALIZERS:
            raise ParameterError(f"unknown initializer {self.initializer!r}")
        if self.activation not in ACTIVATIONS:
            raise ParameterError(f"unknown activation {self.activation!r}")
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ParameterError("epochs >= 0, batch_size >= 1, learning_rate > 0 required")


def init_params(spec: ModelSpec, kind: str, seed: int, dtype=np.float32) -> Model:
    """Fresh model: weights i.i.d. U(-0.05, 0.05) or N(0, 0.05^2), biases and
    beta zero, gamma one. Deterministic given (spec, kind, seed)."""
    if kind not in INITIALIZERS:
        raise ParameterError(f"unknown initializer {kind!r}")
    model = Model(spec, dtype=dtype)
    rng = np.random.default_rng(seed)

    def draw(shape):
        if kind == "uniform":
            w = rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)
        else:
            w = rng.normal(0.0, INIT_SCALE, size=shape)
        return w.astype(dtype)

    for conv, _bn in model.blocks:
        conv.kernels[...] = draw(conv.kernels.shape)
    model.dense.weights[...] = draw(model.dense.weights.shape)
    return model


def cross_entropy_loss(probs, onehot) -> float:
    """Mean over the batch of -sum_k y_k log(max(p_k, 1e-12))."""
    probs = np.asarray(probs)
    onehot = np.asarray(onehot)
    if probs.shape != onehot.shape:
        raise ShapeError(f"probs {probs.shape} vs targets {onehot.shape}")
    per_sample = -(onehot * np.log(np.maximum(probs, 1e-12))).sum(axis=1)
    return float(per_sample.mean())


class Optimizer:
    """Base: per-parameter slot arrays keyed by name, one step counter."""

    epsilon = 1e-7

    def __init__(self):
        self.t = 0
        self.slots: dict[str, dict[str, np.ndarray]] = {}

    def _slot(self, p: Param, names):
        s = self.slots.get(p.name)
        if s is None:
            s = {k: np.zeros_like(p.value, dtype=np.float64) for k in names}
            self.slots[p.name] = s
        return s

    def step(self, params: list[Param], grads: dict[str, np.ndarray], lr: float):
        self.t += 1
        for p in params:
            g = np.asarray(grads[p.name], dtype=np.float64)
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for parameter {p.name}")
            p.value -= self._update(p, g, lr).astype(p.value.dtype)

    def _update(self, p: Param, g: np.ndarray, lr: float) -> np.ndarray:
        raise NotImplementedError


class Adam(Optimizer):
    beta1 = 0.9
    beta2 = 0.999

    def _update(self, p, g, lr):
        s = self._slot(p, ("m", "v"))
        s["m"][...] = self.beta1 * s["m"] + (1 - self.beta1) * g
        s["v"][...] = self.beta2 * s["v"] + (1 - self.beta2) * g**2
        m_hat = s["m"] / (1 - self.beta1**self.t)
        v_hat = s["v"] / (1 - self.beta2**self.t)
        return lr * m_hat / (np.sqrt(v_hat) + self.epsilon)


class Nadam(Optimizer):
    """Adam with a Nesterov look-ahead on the first moment."""

    beta1 = 0.9
    beta2 = 0.999

    def _update(self, p, g, lr):
        s = self._slot(p, ("m", "v"))
        s["m"][...] = self.beta1 * s["m"] + (1 - self.beta1) * g
        s["v"][...] = self.beta2 * s["v"] + (1 - self.beta2) * g**2
        m_hat = (
            self.beta1 * s["m"] / (1 - self.beta1 ** (self.t + 1))
            + (1 - self.beta1) * g / (1 - self.beta1**self.t)
        )
        v_hat = s["v"] / (1 - self.beta2**self.t)
        return lr * m_hat / (np.sqrt(v_hat) + self.epsilon)


class RMSprop(Optimizer):
    rho = 0.9

    def _update(self, p, g, lr):
        s = self._slot(p, ("v",))
        s["v"][...] = self.rho * s["v"] + (1 - self.rho) * g**2
        return lr * g / (np.sqrt(s["v"]) + self.epsilon)


class Adagrad(Optimizer):
    def _update(self, p, g, lr):
        s = self._slot(p, ("acc",))
        s["acc"][...] = s["acc"] + g**2
        return lr * g / (np.sqrt(s["acc"]) + self.epsilon)


_OPTIMIZER_CLASSES = {
    "adam": Adam,
    "rmsprop": RMSprop,
    "nadam": Nadam,
    "adagrad": Adagrad,
}


def make_optimizer(kind: str) -> Optimizer:
    try:
        return _OPTIMIZER_CLASSES[kind]()
    except KeyError:
        raise ParameterError(f"unknown optimizer {kind!r}") from None


def predict_probs(model: Model, images, batch: int = 256) -> np.ndarray:
    """Eval-mode probabilities over all samples in deterministic order."""
    x = np.asarray(images.data if hasattr(images, "data") and not isinstance(images, np.ndarray) else images)
    parts = [model.forward(x[i : i + batch], mode="eval") for i in range(0, len(x), batch)]
    return np.concatenate(parts, axis=0)


def accuracy(model: Model, ds: Dataset) -> float:
    probs = predict_probs(model, ds.images)
    return float((probs.argmax(axis=1) == ds.labels).mean())


def fit(spec: ModelSpec, train: Dataset, val: Dataset | None, cfg: TrainConfig,
        dtype=np.float32) -> tuple[Model, list[dict]]:
    """Train for cfg.epochs, shuffling per epoch from the seeded generator.

    Returns the trained model and one history record per epoch
    (train_loss, train_acc, val_acc).
    """
    if len(train.labels) == 0:
        raise ParameterError("training dataset is empty")
    k = spec.num_classes
    if train.labels.max() >= k:
        raise ShapeError(f"dataset labels exceed the {k}-class head")
    spec = spec.with_activation(cfg.activation)
    model = init_params(spec, cfg.initializer, cfg.seed, dtype=dtype)
    opt = make_optimizer(cfg.optimizer)
    drop_rng = np.random.default_rng([cfg.seed, 0x0D])
    params = model.parameters()
    history: list[dict] = []
    for epoch in range(cfg.epochs):
        total_loss = 0.0
        total_correct = 0
        for b, (x, y) in enumerate(batch_iter(train, cfg.batch_size, cfg.seed, epoch)):
            probs = model.forward(x, mode="train", rng=drop_rng)
            loss = cross_entropy_loss(probs, y)
            if not np.isfinite(loss):
                raise TrainingError(f"loss diverged at epoch {epoch}, batch {b}")
            grads = model.backward(y)
            opt.step(params, grads, cfg.learning_rate)
            total_loss += loss * len(x)
            total_correct += int((probs.argmax(axis=1) == y.argmax(axis=1)).sum())
        n = len(train.labels)
        record = {
            "epoch": epoch,
            "train_loss": total_loss / n,
            "train_acc": total_correct / n,
            "val_acc": accuracy(model, val) if val is not None else None,
        }
        history.append(record)
        log.info(
            "epoch %d/%d loss=%.4f acc=%.4f val_acc=%s",
            epoch + 1, cfg.epochs, record["train_loss"], record["train_acc"],
            "-" if record["val_acc"] is None else f"{record['val_acc']:.4f}",
        )
    return model, history


@dataclass
class GridResult:
    combo_index: int
    config: TrainConfig
    val_accuracy: float | None
    wall_time: float
    epoch_history: list = field(default_factory=list)
    error: str | None = None

    def to_json(self) -> str:
        d = {
            "combo_index": self.combo_index,
            "config": asdict(self.config),
            "val_accuracy": self.val_accuracy,
            "wall_time": self.wall_time,
            "epoch_history": self.epoch_history,
            "error": self.error,
        }
        return json.dumps(d)

    @classmethod
    def from_json(cls, line: str) -> "GridResult":
        d = json.loads(line)
        return cls(
            combo_index=d["combo_index"],
            config=TrainConfig(**d["config"]),
            val_accuracy=d["val_accuracy"],
            wall_time=d["wall_time"],
            epoch_history=d.get("epoch_history", []),
            error=d.get("error"),
        )


def grid_combos(seed: int, epochs: int = 5, batch_size: int = 20,
                learning_rate: float = 0.001) -> list[TrainConfig]:
    """The 24 probe configurations in canonical enumeration order."""
    combos = []
    for i, (o, init, act) in enumerate(product(OPTIMIZERS, INITIALIZERS, ACTIVATIONS)):
        combo_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        combos.append(TrainConfig(
            optimizer=o, initializer=init, activation=act,
            epochs=epochs, batch_size=batch_size,
            learning_rate=learning_rate, seed=combo_seed,
        ))
    return combos


def _run_combo(args) -> GridResult:
    idx, cfg, spec, train, val = args
    start = time.perf_counter()
    try:
        _model, history = fit(spec, train, val, cfg)
        val_acc = history[-1]["val_acc"] if history else 0.0
        return GridResult(idx, cfg, val_acc, time.perf_counter() - start,
                          [(h["train_loss"], h["train_acc"]) for h in history])
    except (TrainingError, NumericError) as exc:
        return GridResult(idx, cfg, None, time.perf_counter() - start, [], str(exc))


def _read_checkpoint(path: str) -> dict[int, GridResult]:
    done: dict[int, GridResult] = {}
    if not path or not os.path.exists(path):
        return done
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            try:
                r = GridResult.from_json(line)
            except (json.JSONDecodeError, KeyError, TypeError):
                continue  # incomplete trailing line from an interrupted run
            done[r.combo_index] = r
    return done


def grid_search(spec: ModelSpec, train: Dataset, val: Dataset | None = None,
                seed: int = 0, epochs: int = 5, batch_size: int = 20,
                checkpoint_path: str | None = None, jobs: int = 1,
                holdout: float = 0.1) -> list[GridResult]:
    """Exhaustive 24-combo search, sorted by validation accuracy descending.

    When no validation set is given, a seeded ``holdout`` fraction of the
    training data is split off for scoring.
    """
    if val is None:
        rng = np.random.default_rng([seed, 0x5A])
        n = len(train.labels)
        perm = rng.permutation(n)
        n_val = max(1, int(round(n * holdout)))
        val = subset(train, perm[:n_val], split="val")
        train = subset(train, perm[n_val:], split="train")
    combos = grid_combos(seed, epochs=epochs, batch_size=batch_size)
    done = _read_checkpoint(checkpoint_path) if checkpoint_path else {}
    pending = [(i, cfg, spec, train, val) for i, cfg in enumerate(combos) if i not in done]
    ckpt = open(checkpoint_path, "a", encoding="utf-8") if checkpoint_path else None
    try:
        if jobs > 1 and pending:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for r in pool.map(_run_combo, pending):
                    done[r.combo_index] = r
                    if ckpt:
                        ckpt.write(r.to_json() + "\n")
                        ckpt.flush()
        else:
            for args in pending:
                r = _run_combo(args)
                done[r.combo_index] = r
                if ckpt:
                    ckpt.write(r.to_json() + "\n")
                    ckpt.flush()
                log.info("combo %d/%d %s/%s/%s -> val_acc=%s",
                         r.combo_index + 1, len(combos), r.config.optimizer,
                         r.config.initializer, r.config.activation, r.val_accuracy)
    finally:
        if ckpt:
            ckpt.close()
    results = [done[i] for i in range(len(combos))]
    results.sort(key=lambda r: (-1.0 if r.val_accuracy is None else r.val_accuracy),
                 reverse=True)
    return results
