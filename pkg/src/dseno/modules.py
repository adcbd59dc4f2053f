"""Layer modules: thin stateful wrappers over the functional rules.

Each module caches what its backward pass needs during forward; backward
consumes the cache, accumulates parameter gradients in place, and returns the
gradient with respect to its input. A module instance therefore supports one
in-flight forward/backward pair at a time; composite models call children in
reverse order to propagate gradients explicitly.
"""
from __future__ import annotations

import numpy as np

from . import functional as F
from .errors import ConfigError
from .tensor import Parameter, as_dtype


class Module:
    """Base class: parameter discovery and gradient bookkeeping."""

    def children(self):
        return []

    def named_parameters(self):
        for child in self.children():
            yield from child.named_parameters()

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def parameter_total(self) -> int:
        return sum(p.size for p in self.parameters())

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)


def _uniform_init(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    bound = float(np.sqrt(1.0 / fan_in))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class DilatedConv2d(Module):
    """Resolution-preserving dilated convolution layer."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 dilation: tuple[int, int] = (1, 1), bias: bool = True,
                 padding_mode: str = "zero", dtype="float32",
                 rng: np.random.Generator | None = None, name: str = "conv"):
        dtype = as_dtype(dtype)
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = Parameter(
            _uniform_init(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in, dtype),
            name=f"{name}.weight",
        )
        self.bias = (
            Parameter(_uniform_init(rng, (out_channels,), fan_in, dtype), name=f"{name}.bias")
            if bias
            else None
        )
        self.dilation = (int(dilation[0]), int(dilation[1]))
        self.padding_mode = padding_mode
        self._x: np.ndarray | None = None
        self.kernel  # construct once to validate geometry

    @property
    def kernel(self) -> F.ConvKernel:
        return F.ConvKernel(
            weight=self.weight,
            bias=self.bias,
            dilation=self.dilation,
            padding_mode=self.padding_mode,
        )

    def named_parameters(self):
        yield self.weight.name, self.weight
        if self.bias is not None:
            yield self.bias.name, self.bias

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return F.conv2d_dilated_forward(x, self.kernel).data

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise ConfigError("backward called before forward")
        gx, gw, gb = F.conv2d_dilated_backward(self._x, self.kernel, grad)
        self.weight.accumulate_grad(gw.data)
        if self.bias is not None:
            self.bias.accumulate_grad(gb.data)
        self._x = None
        return gx.data


class PointwiseConv2d(Module):
    """1x1 convolution: per-pixel affine map across channels."""

    def __init__(self, in_channels: int, out_channels: int, bias: bool = True,
                 dtype="float32", rng: np.random.Generator | None = None,
                 name: str = "pointwise"):
        dtype = as_dtype(dtype)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weight = Parameter(
            _uniform_init(rng, (out_channels, in_channels), in_channels, dtype),
            name=f"{name}.weight",
        )
        self.bias = (
            Parameter(_uniform_init(rng, (out_channels,), in_channels, dtype), name=f"{name}.bias")
            if bias
            else None
        )
        self._x: np.ndarray | None = None

    def named_parameters(self):
        yield self.weight.name, self.weight
        if self.bias is not None:
            yield self.bias.name, self.bias

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return F.pointwise_conv(x, self.weight, self.bias).data

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise ConfigError("backward called before forward")
        gx, gw, gb = F.pointwise_conv_backward(
            self._x, self.weight, grad, has_bias=self.bias is not None
        )
        self.weight.accumulate_grad(gw.data)
        if self.bias is not None:
            self.bias.accumulate_grad(gb.data)
        self._x = None
        return gx.data


class GELU(Module):
    def __init__(self):
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return F.gelu(x).data

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise ConfigError("backward called before forward")
        gx = F.gelu_backward(self._x, grad).data
        self._x = None
        return gx


class Sigmoid(Module):
    def __init__(self):
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return F.sigmoid(x).data

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise ConfigError("backward called before forward")
        gx = F.sigmoid_backward(self._x, grad).data
        self._x = None
        return gx


class GlobalAvgPool(Module):
    def __init__(self):
        self._shape: tuple | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._shape = x.shape
        return F.global_avg_pool(x).data

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self._shape is None:
            raise ConfigError("backward called before forward")
        gx = F.global_avg_pool_backward(self._shape, grad).data
        self._shape = None
        return gx
