"""Dense tensor container with an optional gradient buffer.

The canonical layout for field data is (batch, channel, height, width),
row-major. A Tensor wraps a numpy array plus, when trainable, a gradient
buffer of identical shape and dtype.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError, NumericError

SUPPORTED_DTYPES = (np.float32, np.float64)


def as_dtype(dtype) -> np.dtype:
    d = np.dtype(dtype)
    if d not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ConfigError(f"unsupported dtype {d}; expected float32 or float64")
    return d


def require_finite(name: str, array: np.ndarray) -> None:
    """Reject NaN/Inf instead of letting it propagate silently."""
    if not np.isfinite(array).all():
        raise NumericError(f"non-finite values in {name}")


class Tensor:
    """A dense numeric array with an optional same-shape gradient buffer."""

    __slots__ = ("data", "grad")

    def __init__(self, data, dtype=None):
        if dtype is not None:
            dtype = as_dtype(dtype)
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
            arr = arr.astype(np.float64)
        self.data: np.ndarray = arr
        self.grad: np.ndarray | None = None

    # -- construction helpers -------------------------------------------------
    @staticmethod
    def zeros(shape, dtype=np.float32) -> "Tensor":
        return Tensor(np.zeros(shape, dtype=as_dtype(dtype)))

    @staticmethod
    def full(shape, value, dtype=np.float32) -> "Tensor":
        return Tensor(np.full(shape, value, dtype=as_dtype(dtype)))

    # -- views ----------------------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    # -- gradient management ---------------------------------------------------
    def ensure_grad(self) -> np.ndarray:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def accumulate_grad(self, delta: np.ndarray) -> None:
        if delta.shape != self.data.shape:
            raise ConfigError(
                f"gradient shape {delta.shape} does not match value shape {self.data.shape}"
            )
        self.ensure_grad()
        self.grad += delta

    # -- misc -------------------------------------------------------------------
    def copy(self) -> "Tensor":
        t = Tensor(self.data.copy())
        if self.grad is not None:
            t.grad = self.grad.copy()
        return t

    def astype(self, dtype) -> "Tensor":
        return Tensor(self.data.astype(as_dtype(dtype)))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype.name}, grad={'yes' if self.grad is not None else 'no'})"


def as_array(x) -> np.ndarray:
    """Accept Tensor or ndarray-like, return the underlying ndarray."""
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x)


class Parameter(Tensor):
    """A trainable tensor: named, with an always-allocated gradient buffer."""

    __slots__ = ("name",)

    def __init__(self, data, name: str, dtype=None):
        super().__init__(data, dtype=dtype)
        self.name = name
        self.ensure_grad()

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.shape}, dtype={self.dtype.name})"
