"""CSV ingestion, orientation fix, one-hot encoding, and batch iteration.

The source files are the MNIST-style CSV exports of the character/digit
datasets: one row per image with side^2 integer pixels in [0, 255], plus a
matching labels file with one integer per row. Raw rows decode sideways,
so the loader transposes each image (the flip-then-rotate correction)
before rescaling to [0, 1].
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, LabelError, PairingError, ParameterError, ShapeError
from .tensor import Tensor4, transpose_hw

log = logging.getLogger(__name__)

DIGIT_NAMES = (
    "sifr", "wahid", "ithnan", "thalaatha", "arbiya",
    "khamsa", "sitta", "sabya", "thamaniiya", "tisya",
)
LETTER_NAMES = (
    "alef", "ba", "ta", "tha", "jim", "ha", "kha", "dal", "dhal", "ra",
    "za", "sin", "shin", "sad", "dad", "tah", "zah", "ayn", "ghayn", "fa",
    "qaf", "kaf", "lam", "mim", "nun", "heh", "waw", "yeh",
)


@dataclass(frozen=True)
class LabelMap:
    class_count: int
    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) != self.class_count:
            raise ParameterError("label map names must match class_count")

    @classmethod
    def digits(cls) -> "LabelMap":
        return cls(10, DIGIT_NAMES)

    @classmethod
    def letters(cls) -> "LabelMap":
        return cls(28, LETTER_NAMES)

    @classmethod
    def for_head(cls, class_count: int) -> "LabelMap":
        if class_count == 10:
            return cls.digits()
        if class_count == 28:
            return cls.letters()
        return cls(class_count, tuple(f"class{i}" for i in range(class_count)))


@dataclass(frozen=True)
class Dataset:
    images: Tensor4  # (n, side, side, 1), values in [0, 1]
    labels: np.ndarray  # (n,) integers in [0, class_count)
    class_names: tuple[str, ...]
    split: str = "train"

    def __post_init__(self):
        n = self.images.shape.n
        if self.labels.shape != (n,):
            raise PairingError(f"{n} images but {len(self.labels)} labels")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise LabelError("label outside [0, class_count)")

    @property
    def side(self) -> int:
        return self.images.shape.h


def subset(ds: Dataset, indices, split: str | None = None) -> Dataset:
    idx = np.asarray(indices)
    return Dataset(
        images=Tensor4(ds.images.data[idx], dtype=ds.images.dtype),
        labels=ds.labels[idx],
        class_names=ds.class_names,
        split=split or ds.split,
    )


def orient_fix(img: Tensor4) -> Tensor4:
    """Upright a raw CSV-decoded glyph: horizontal flip then 90 deg CCW
    rotation, which composes to the h/w transpose."""
    s = img.shape
    if s.h != s.w:
        raise ShapeError(f"orientation fix needs square images, got {s.h}x{s.w}")
    return transpose_hw(img)


def one_hot(labels, class_count: int) -> np.ndarray:
    labels = np.asarray(labels)
    if len(labels) and (labels.min() < 0 or labels.max() >= class_count):
        raise LabelError(f"label outside [0, {class_count})")
    out = np.zeros((len(labels), class_count), dtype=np.float32)
    out[np.arange(len(labels)), labels] = 1.0
    return out


def _parse_pixel_rows(path: str, header: bool) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if header and lineno == 1:
                continue
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise FormatError(
                    f"{path}: row {lineno} has {len(fields)} fields, expected {width}"
                )
            try:
                rows.append(np.array(fields, dtype=np.int64))
            except ValueError:
                raise FormatError(f"{path}: row {lineno} has a non-integer field") from None
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return np.stack(rows)


def load_csv_pair(images_path: str, labels_path: str, label_map: LabelMap,
                  side: int = 64, header: bool = False,
                  split: str = "train") -> Dataset:
    """Load an images/labels CSV pair into an upright, rescaled dataset.

    The source side length is inferred as sqrt(row width); if it differs
    from the requested model ``side`` the images are upsampled by
    nearest-neighbor replication (the factor must be integral).
    """
    raw = _parse_pixel_rows(images_path, header)
    n, width = raw.shape
    src_side = math.isqrt(width)
    if src_side * src_side != width:
        raise FormatError(f"{images_path}: row width {width} is not a perfect square")
    if raw.min() < 0 or raw.max() > 255:
        raise FormatError(f"{images_path}: pixel values must lie in [0, 255]")

    labels = _parse_pixel_rows(labels_path, header)
    if labels.shape[1] != 1:
        raise FormatError(f"{labels_path}: expected one integer per row")
    labels = labels[:, 0]
    if len(labels) != n:
        raise PairingError(
            f"{n} image rows but {len(labels)} label rows"
        )
    k = label_map.class_count
    if len(labels) and labels.min() == 1 and labels.max() == k:
        log.warning("labels look 1-indexed (min=1, max=%d); shifting down by 1", k)
        labels = labels - 1
    if labels.min() < 0 or labels.max() >= k:
        raise LabelError(
            f"{labels_path}: label {int(labels.max())} outside [0, {k})"
        )

    imgs = raw.reshape(n, src_side, src_side, 1).astype(np.float32)
    if side != src_side:
        if side % src_side != 0:
            raise FormatError(
                f"cannot scale {src_side}x{src_side} source to {side}x{side}: "
                "non-integral factor"
            )
        f = side // src_side
        imgs = np.repeat(np.repeat(imgs, f, axis=1), f, axis=2)
    t = orient_fix(Tensor4(imgs))
    t = Tensor4(t.data / np.float32(255.0))
    return Dataset(images=t, labels=labels, class_names=label_map.names, split=split)


def batch_iter(ds: Dataset, batch_size: int, seed: int, epoch: int):
    """Yield (images, one-hot labels) batches under a per-epoch seeded shuffle.

    The permutation stream is derived from (seed, epoch), so epochs are
    independent and the whole schedule is reproducible. The final batch may
    be short; every sample appears exactly once.
    """
    if batch_size < 1:
        raise ParameterError("batch_size must be >= 1")
    n = len(ds.labels)
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    x = ds.images.data
    y = one_hot(ds.labels, len(ds.class_names))
    for start in range(0, n, batch_size):
        idx = perm[start : start + batch_size]
        yield x[idx], y[idx]


def synthetic_blobs(n_per_class: int = 100, side: int = 64, classes: int = 3,
                    seed: int = 0, noise: float = 0.05) -> Dataset:
    """Separable toy data: each class lights up a distinct square patch."""
    rng = np.random.default_rng(seed)
    n = n_per_class * classes
    imgs = np.zeros((n, side, side, 1), dtype=np.float32)
    labels = np.zeros(n, dtype=np.int64)
    patch = max(4, side // 4)
    for k in range(classes):
        r0 = (k * (side - patch)) // max(1, classes - 1)
        for i in range(n_per_class):
            j = k * n_per_class + i
            img = rng.normal(0.0, noise, size=(side, side, 1))
            jitter = rng.integers(-2, 3, size=2)
            a = int(np.clip(r0 + jitter[0], 0, side - patch))
            b = int(np.clip(r0 + jitter[1], 0, side - patch))
            img[a : a + patch, b : b + patch, 0] += 1.0
            imgs[j] = np.clip(img, 0.0, 1.0)
            labels[j] = k
    names = tuple(f"blob{k}" for k in range(classes))
    return Dataset(images=Tensor4(imgs), labels=labels, class_names=names, split="train")
