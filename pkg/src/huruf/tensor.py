"""Rank-4 tensor container plus the shape and elementwise primitives.

Everything downstream moves activations and gradients around as arrays in
row-major (samples, height, width, channels) order. ``Tensor4`` freezes a
numpy buffer into that layout, validates finiteness, and exposes the small
set of whole-tensor operations the data pipeline needs. Numerical layers
work on the raw ``.data`` arrays directly.

The element type is float32 by default; gradient checking constructs
float64 tensors through the same code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ShapeError

_ALLOWED_DTYPES = (np.float32, np.float64)


@dataclass(frozen=True)
class Shape4:
    """Dimensions of a rank-4 tensor: (samples, rows, cols, channels)."""

    n: int
    h: int
    w: int
    c: int

    def __post_init__(self):
        for name in ("n", "h", "w", "c"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ShapeError(f"dimension {name}={v!r} must be a positive integer")

    @property
    def size(self) -> int:
        return self.n * self.h * self.w * self.c

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.n, self.h, self.w, self.c)


class Tensor4:
    """Immutable rank-4 array. The buffer is copied in and marked read-only."""

    __slots__ = ("_data",)

    def __init__(self, data, dtype=None):
        arr = np.asarray(data)
        if dtype is None:
            dtype = arr.dtype if arr.dtype in (np.float32, np.float64) else np.float32
        if np.dtype(dtype) not in [np.dtype(d) for d in _ALLOWED_DTYPES]:
            raise ShapeError(f"unsupported element type {dtype!r}")
        arr = np.array(arr, dtype=dtype, copy=True)
        if arr.ndim != 4:
            raise ShapeError(f"expected a rank-4 array, got rank {arr.ndim}")
        if arr.size == 0:
            raise ShapeError("empty tensor")
        if not np.all(np.isfinite(arr)):
            raise NumericError("tensor contains non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "_data", arr)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> Shape4:
        return Shape4(*self._data.shape)

    @property
    def dtype(self):
        return self._data.dtype

    def __repr__(self):
        return f"Tensor4(shape={self._data.shape}, dtype={self._data.dtype})"


def reshape(t: Tensor4, s: Shape4) -> Tensor4:
    """Reinterpret the buffer under a new shape with the same element count."""
    if s.size != t.shape.size:
        raise ShapeError(
            f"cannot reshape {t.shape.as_tuple()} ({t.shape.size} elements) "
            f"to {s.as_tuple()} ({s.size} elements)"
        )
    return Tensor4(t.data.reshape(s.as_tuple()), dtype=t.dtype)


def transpose_hw(t: Tensor4) -> Tensor4:
    """Swap the two spatial axes: out[n, i, j, c] = t[n, j, i, c]."""
    return Tensor4(np.transpose(t.data, (0, 2, 1, 3)), dtype=t.dtype)


def scale(t: Tensor4, k: float) -> Tensor4:
    """Multiply every element by a scalar."""
    return Tensor4(t.data * t.dtype.type(k), dtype=t.dtype)
