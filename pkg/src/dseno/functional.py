"""Differentiable layer primitives with explicit forward and backward rules.

All spatial ops take (N, C, H, W) tensors. The dilated convolution places
kernel taps l-1 cells apart per axis; with the resolution-preserving padding
l*(k-1)/2 per axis the output grid equals the input grid. Convolutions are
evaluated as a column gather followed by one GEMM per batch chunk, which is
mathematically the direct summation with a fixed accumulation order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, expit

from .errors import ConfigError
from .tensor import Tensor, as_array, require_finite

PADDING_MODES = ("zero", "circular")

# Cap on the transient column-buffer size; larger batches are processed in chunks.
_COLS_BYTE_LIMIT = 128 * 2**20

_INV_SQRT2 = float(1.0 / np.sqrt(2.0))
_INV_SQRT_2PI = float(1.0 / np.sqrt(2.0 * np.pi))


def resolution_preserving_padding(k_h: int, k_w: int, dilation: tuple[int, int]) -> tuple[int, int]:
    """Padding (pad_h, pad_w) that keeps the output grid equal to the input grid."""
    l_x, l_y = dilation
    return (l_y * (k_h - 1) // 2, l_x * (k_w - 1) // 2)


@dataclass
class ConvKernel:
    """Weights and geometry of one dilated 2-D convolution.

    weight: (C_out, C_in, k_h, k_w); bias: optional (C_out,);
    dilation: (l_x, l_y) with l_x acting along W and l_y along H;
    padding: (pad_h, pad_w); padding_mode: zero or circular.
    """

    weight: Tensor
    bias: Tensor | None = None
    dilation: tuple[int, int] = (1, 1)
    padding: tuple[int, int] | None = None
    padding_mode: str = "zero"
    resolution_preserving: bool = field(default=True)

    def __post_init__(self):
        w = as_array(self.weight)
        if w.ndim != 4:
            raise ConfigError(f"conv weight must be rank 4, got shape {w.shape}")
        c_out, c_in, k_h, k_w = w.shape
        if c_out < 1 or c_in < 1:
            raise ConfigError(f"channel counts must be positive, got ({c_out}, {c_in})")
        if k_h % 2 == 0 or k_w % 2 == 0:
            raise ConfigError(f"kernel sizes must be odd, got {k_h}x{k_w}")
        l_x, l_y = self.dilation
        if l_x < 1 or l_y < 1:
            raise ConfigError(f"dilation must be positive, got {self.dilation}")
        if self.padding is None:
            self.padding = resolution_preserving_padding(k_h, k_w, self.dilation)
        p_h, p_w = self.padding
        if p_h < 0 or p_w < 0:
            raise ConfigError(f"padding must be nonnegative, got {self.padding}")
        if self.resolution_preserving and self.padding != resolution_preserving_padding(
            k_h, k_w, self.dilation
        ):
            raise ConfigError(
                f"padding {self.padding} is not resolution-preserving for "
                f"kernel {k_h}x{k_w} at dilation {self.dilation}"
            )
        if self.padding_mode not in PADDING_MODES:
            raise ConfigError(f"unknown padding mode {self.padding_mode!r}")
        if self.bias is not None:
            b = as_array(self.bias)
            if b.shape != (c_out,):
                raise ConfigError(f"bias shape {b.shape} must be ({c_out},)")
            if b.dtype != w.dtype:
                raise ConfigError("bias dtype must match weight dtype")

    @property
    def out_channels(self) -> int:
        return as_array(self.weight).shape[0]

    @property
    def in_channels(self) -> int:
        return as_array(self.weight).shape[1]

    @property
    def kernel_size(self) -> tuple[int, int]:
        s = as_array(self.weight).shape
        return (s[2], s[3])


def _pad_input(x: np.ndarray, pad: tuple[int, int], mode: str) -> np.ndarray:
    p_h, p_w = pad
    if p_h == 0 and p_w == 0:
        return x
    if mode == "zero":
        return np.pad(x, ((0, 0), (0, 0), (p_h, p_h), (p_w, p_w)))
    # Circular: gather wrapped indices; valid for any padding size.
    h, w = x.shape[2], x.shape[3]
    rows = (np.arange(-p_h, h + p_h)) % h
    cols = (np.arange(-p_w, w + p_w)) % w
    return x[:, :, rows][:, :, :, cols]


def _out_extent(extent: int, pad: int, l: int, k: int) -> int:
    out = extent + 2 * pad - l * (k - 1)
    if out < 1:
        raise ConfigError(
            f"convolution output extent {out} < 1 (input {extent}, pad {pad}, "
            f"dilation {l}, kernel {k})"
        )
    return out


def _im2col(xp: np.ndarray, k_h: int, k_w: int, l_y: int, l_x: int,
            h_out: int, w_out: int) -> np.ndarray:
    """Gather kernel-tap windows into (C*k_h*k_w, N*h_out*w_out) columns.

    Row order is channel-major then tap so the flattened kernel
    weight.reshape(C_out, -1) lines up with the rows; batch samples sit
    side by side along the columns, giving one large GEMM per chunk.
    """
    n, c = xp.shape[0], xp.shape[1]
    xp_t = xp.transpose(1, 0, 2, 3)
    cols = np.empty((c, k_h * k_w, n, h_out * w_out), dtype=xp.dtype)
    for i in range(k_h):
        for j in range(k_w):
            window = xp_t[:, :, l_y * i : l_y * i + h_out, l_x * j : l_x * j + w_out]
            cols[:, i * k_w + j] = window.reshape(c, n, -1)
    return cols.reshape(c * k_h * k_w, n * h_out * w_out)


def _batch_chunks(n: int, k: int, length: int, itemsize: int):
    per_sample = k * length * itemsize
    chunk = max(1, _COLS_BYTE_LIMIT // max(1, per_sample))
    for start in range(0, n, chunk):
        yield start, min(n, start + chunk)


def _check_forward_args(x: np.ndarray, kernel: ConvKernel) -> np.ndarray:
    w = as_array(kernel.weight)
    if x.ndim != 4:
        raise ConfigError(f"conv input must be rank 4, got shape {x.shape}")
    if x.shape[1] != kernel.in_channels:
        raise ConfigError(
            f"input has {x.shape[1]} channels, kernel expects {kernel.in_channels}"
        )
    if x.dtype != w.dtype:
        raise ConfigError(f"input dtype {x.dtype} does not match kernel dtype {w.dtype}")
    return w


def conv2d_dilated_forward(input: Tensor | np.ndarray, kernel: ConvKernel) -> Tensor:
    """Dilated cross-correlation with the kernel's padding and padding mode."""
    x = as_array(input)
    w = _check_forward_args(x, kernel)
    n, _, h, wdt = x.shape
    k_h, k_w = kernel.kernel_size
    l_x, l_y = kernel.dilation
    p_h, p_w = kernel.padding
    h_out = _out_extent(h, p_h, l_y, k_h)
    w_out = _out_extent(wdt, p_w, l_x, k_w)

    xp = _pad_input(x, kernel.padding, kernel.padding_mode)
    w2d = w.reshape(kernel.out_channels, -1)
    length = h_out * w_out
    out = np.empty((n, kernel.out_channels, length), dtype=x.dtype)
    for s, e in _batch_chunks(n, w2d.shape[1], length, x.dtype.itemsize):
        cols = _im2col(xp[s:e], k_h, k_w, l_y, l_x, h_out, w_out)
        prod = np.matmul(w2d, cols).reshape(kernel.out_channels, e - s, length)
        out[s:e] = prod.transpose(1, 0, 2)
    out = out.reshape(n, kernel.out_channels, h_out, w_out)
    if kernel.bias is not None:
        out += as_array(kernel.bias)[None, :, None, None]
    require_finite("conv2d_dilated_forward output", out)
    return Tensor(out)


def conv2d_dilated_backward(
    input: Tensor | np.ndarray, kernel: ConvKernel, grad_out: Tensor | np.ndarray
):
    """Exact adjoints of conv2d_dilated_forward.

    Returns (grad_input, grad_weight, grad_bias); grad_bias is None when the
    kernel has no bias.
    """
    x = as_array(input)
    w = _check_forward_args(x, kernel)
    g = as_array(grad_out)
    n, c_in, h, wdt = x.shape
    k_h, k_w = kernel.kernel_size
    l_x, l_y = kernel.dilation
    p_h, p_w = kernel.padding
    h_out = _out_extent(h, p_h, l_y, k_h)
    w_out = _out_extent(wdt, p_w, l_x, k_w)
    expected = (n, kernel.out_channels, h_out, w_out)
    if g.shape != expected:
        raise ConfigError(f"grad_out shape {g.shape} does not match output shape {expected}")
    if g.dtype != x.dtype:
        raise ConfigError(f"grad_out dtype {g.dtype} does not match input dtype {x.dtype}")

    xp = _pad_input(x, kernel.padding, kernel.padding_mode)
    w2d = w.reshape(kernel.out_channels, -1)

    grad_w2d = np.zeros_like(w2d)
    gxp = np.zeros_like(xp)
    gxp_t = gxp.transpose(1, 0, 2, 3)
    length = h_out * w_out
    for s, e in _batch_chunks(n, w2d.shape[1], length, x.dtype.itemsize):
        cols = _im2col(xp[s:e], k_h, k_w, l_y, l_x, h_out, w_out)
        g_m = g[s:e].transpose(1, 0, 2, 3).reshape(kernel.out_channels, -1)
        grad_w2d += np.matmul(cols, g_m.T).T
        gcols = np.matmul(w2d.T, g_m)
        gcols = gcols.reshape(c_in, k_h * k_w, e - s, h_out, w_out)
        for i in range(k_h):
            for j in range(k_w):
                gxp_t[:, s:e, l_y * i : l_y * i + h_out, l_x * j : l_x * j + w_out] += gcols[
                    :, i * k_w + j
                ]
    grad_w = grad_w2d.reshape(w.shape)

    if p_h == 0 and p_w == 0:
        grad_x = gxp
    elif kernel.padding_mode == "zero":
        grad_x = gxp[:, :, p_h : p_h + h, p_w : p_w + wdt].copy()
    else:
        grad_x = np.zeros_like(x)
        rows = (np.arange(-p_h, h + p_h)) % h
        cols_idx = (np.arange(-p_w, wdt + p_w)) % wdt
        np.add.at(grad_x, (slice(None), slice(None), rows[:, None], cols_idx[None, :]), gxp)

    grad_b = g.sum(axis=(0, 2, 3)) if kernel.bias is not None else None
    require_finite("conv2d_dilated_backward grad_input", grad_x)
    require_finite("conv2d_dilated_backward grad_weight", grad_w)
    return Tensor(grad_x), Tensor(grad_w), (Tensor(grad_b) if grad_b is not None else None)


# -- pointwise (1x1) convolution ------------------------------------------------

def _check_pointwise(x: np.ndarray, w: np.ndarray, b: np.ndarray | None):
    if x.ndim != 4:
        raise ConfigError(f"pointwise input must be rank 4, got shape {x.shape}")
    if w.ndim != 2:
        raise ConfigError(f"pointwise weight must be rank 2, got shape {w.shape}")
    if x.shape[1] != w.shape[1]:
        raise ConfigError(f"input has {x.shape[1]} channels, weight expects {w.shape[1]}")
    if b is not None and b.shape != (w.shape[0],):
        raise ConfigError(f"bias shape {b.shape} must be ({w.shape[0]},)")


def pointwise_conv(
    input: Tensor | np.ndarray, weight: Tensor | np.ndarray, bias: Tensor | np.ndarray | None = None
) -> Tensor:
    """Per-pixel affine map across channels; equals a 1x1 convolution."""
    x = as_array(input)
    w = as_array(weight)
    b = as_array(bias) if bias is not None else None
    _check_pointwise(x, w, b)
    n, c, h, wdt = x.shape
    out = np.matmul(w, x.reshape(n, c, h * wdt)).reshape(n, w.shape[0], h, wdt)
    if b is not None:
        out += b[None, :, None, None]
    require_finite("pointwise_conv output", out)
    return Tensor(out)


def pointwise_conv_backward(
    input: Tensor | np.ndarray,
    weight: Tensor | np.ndarray,
    grad_out: Tensor | np.ndarray,
    has_bias: bool = True,
):
    x = as_array(input)
    w = as_array(weight)
    g = as_array(grad_out)
    _check_pointwise(x, w, None)
    n, c, h, wdt = x.shape
    if g.shape != (n, w.shape[0], h, wdt):
        raise ConfigError(
            f"grad_out shape {g.shape} does not match output shape {(n, w.shape[0], h, wdt)}"
        )
    g2d = g.reshape(n, w.shape[0], h * wdt)
    x2d = x.reshape(n, c, h * wdt)
    grad_x = np.matmul(w.T, g2d).reshape(x.shape)
    grad_w = np.tensordot(g2d, x2d, axes=([0, 2], [0, 2]))
    grad_b = g.sum(axis=(0, 2, 3)) if has_bias else None
    return Tensor(grad_x), Tensor(grad_w), (Tensor(grad_b) if grad_b is not None else None)


# -- global average pool ---------------------------------------------------------

def global_avg_pool(input: Tensor | np.ndarray) -> Tensor:
    """Mean over the spatial grid per channel: (N, C, H, W) -> (N, C, 1, 1)."""
    x = as_array(input)
    if x.ndim != 4:
        raise ConfigError(f"pool input must be rank 4, got shape {x.shape}")
    if x.shape[2] < 1 or x.shape[3] < 1:
        raise ConfigError(f"pool input has empty spatial extent {x.shape[2:]} ")
    return Tensor(x.mean(axis=(2, 3), keepdims=True))


def global_avg_pool_backward(input_shape: tuple, grad_out: Tensor | np.ndarray) -> Tensor:
    g = as_array(grad_out)
    n, c, h, w = input_shape
    if g.shape != (n, c, 1, 1):
        raise ConfigError(f"grad_out shape {g.shape} must be {(n, c, 1, 1)}")
    scale = 1.0 / (h * w)
    return Tensor(np.broadcast_to(g * scale, input_shape).copy())


# -- activations ------------------------------------------------------------------

def _phi(x: np.ndarray) -> np.ndarray:
    """Standard normal CDF."""
    return 0.5 * (1.0 + erf(x * _INV_SQRT2))


def gelu(input: Tensor | np.ndarray) -> Tensor:
    """Exact GELU: x * Phi(x) with Phi the standard normal CDF."""
    x = as_array(input)
    return Tensor(x * _phi(x))


def gelu_backward(input: Tensor | np.ndarray, grad_out: Tensor | np.ndarray) -> Tensor:
    x = as_array(input)
    g = as_array(grad_out)
    pdf = np.exp(-0.5 * x * x) * _INV_SQRT_2PI
    return Tensor(g * (_phi(x) + x * pdf))


def sigmoid(input: Tensor | np.ndarray) -> Tensor:
    """Numerically stable logistic function."""
    x = as_array(input)
    return Tensor(expit(x))


def sigmoid_backward(input: Tensor | np.ndarray, grad_out: Tensor | np.ndarray) -> Tensor:
    s = expit(as_array(input))
    return Tensor(as_array(grad_out) * s * (1.0 - s))
