"""Spectral baseline: real-input 2-D FFT helpers, the mode-truncated
spectral convolution with direct complex multiplication, and the four-layer
lift-spectral-project model (GELU activations, no batch normalization).

Complex spectral weights are stored as interleaved real/imag scalar pairs so
the optimizer and the gradient checker treat them as ordinary real
parameters. Backward rules use the exact adjoints of numpy's rfft2/irfft2:
grad wrt the half-spectrum picks up a factor 2 on columns that carry a
conjugate image and 1 on the self-conjugate columns.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .modules import GELU, Module, PointwiseConv2d
from .tensor import Parameter, as_array, as_dtype, require_finite


def rfft2(field) -> np.ndarray:
    """Unnormalized forward transform of the last two axes; half spectrum."""
    x = as_array(field)
    if x.shape[-1] < 1 or x.shape[-2] < 1:
        raise ConfigError("rfft2 needs nonempty spatial extents")
    return np.fft.rfft2(x, axes=(-2, -1))


def irfft2(spectrum, s: tuple[int, int]) -> np.ndarray:
    """1/(H*W)-normalized inverse of rfft2; returns a real field of size s."""
    return np.fft.irfft2(np.asarray(spectrum), s=s, axes=(-2, -1))


def _half_spectrum_adjoint_factor(w_extent: int, dtype) -> np.ndarray:
    """Column weights of the irfft2 adjoint: 1 on self-conjugate columns, 2 elsewhere."""
    wf = w_extent // 2 + 1
    fac = np.full(wf, 2.0, dtype=dtype)
    fac[0] = 1.0
    if w_extent % 2 == 0:
        fac[-1] = 1.0
    return fac


@dataclass
class SpectralWeights:
    """Mode-truncated complex mixing weights, one retained corner of the
    half spectrum: stored (C_in, C_out, m1, m2, 2) with [..., 0] real and
    [..., 1] imaginary parts."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 5 or d.shape[-1] != 2:
            raise ConfigError(
                f"spectral weights must have shape (C_in, C_out, m1, m2, 2), got {d.shape}"
            )
        self.data = d

    @property
    def modes(self) -> tuple[int, int]:
        return (self.data.shape[2], self.data.shape[3])

    @property
    def in_channels(self) -> int:
        return self.data.shape[0]

    @property
    def out_channels(self) -> int:
        return self.data.shape[1]

    def as_complex(self) -> np.ndarray:
        return self.data[..., 0] + 1j * self.data[..., 1]


def _check_modes(modes: tuple[int, int], h: int, w: int):
    m1, m2 = modes
    wf = w // 2 + 1
    if m1 > h or m2 > wf:
        raise ConfigError(
            f"modes {modes} exceed the grid spectrum ({h}, {wf}) for a {h}x{w} field"
        )


def spectral_conv(input, weights: SpectralWeights) -> np.ndarray:
    """Mix the lowest (m1, m2) modes across channels; zero all other modes."""
    x = as_array(input)
    if x.ndim != 4:
        raise ConfigError(f"spectral input must be rank 4, got shape {x.shape}")
    if x.shape[1] != weights.in_channels:
        raise ConfigError(
            f"input has {x.shape[1]} channels, weights expect {weights.in_channels}"
        )
    n, _, h, w = x.shape
    m1, m2 = weights.modes
    _check_modes(weights.modes, h, w)
    wf = w // 2 + 1
    f = rfft2(x)
    g = np.zeros((n, weights.out_channels, h, wf), dtype=f.dtype)
    g[:, :, :m1, :m2] = np.einsum(
        "ncpq,copq->nopq", f[:, :, :m1, :m2], weights.as_complex(), optimize=True
    )
    out = irfft2(g, s=(h, w)).astype(x.dtype, copy=False)
    require_finite("spectral_conv output", out)
    return out


def spectral_conv_backward(input, weights: SpectralWeights, grad_out):
    """Adjoints of spectral_conv: (grad_input, grad_weights_interleaved)."""
    x = as_array(input)
    g = as_array(grad_out)
    n, _, h, w = x.shape
    if g.shape != (n, weights.out_channels, h, w):
        raise ConfigError(
            f"grad_out shape {g.shape} does not match output shape "
            f"{(n, weights.out_channels, h, w)}"
        )
    m1, m2 = weights.modes
    wc = weights.as_complex()

    fac = _half_spectrum_adjoint_factor(w, np.float64)
    grad_g = np.fft.rfft2(g, axes=(-2, -1)) * (fac / (h * w))
    grad_g_modes = grad_g[:, :, :m1, :m2]

    f_modes = rfft2(x)[:, :, :m1, :m2]
    grad_w = np.einsum("ncpq,nopq->copq", np.conj(f_modes), grad_g_modes, optimize=True)
    grad_w_pairs = np.stack([grad_w.real, grad_w.imag], axis=-1).astype(weights.data.dtype)

    grad_f_modes = np.einsum("nopq,copq->ncpq", grad_g_modes, np.conj(wc), optimize=True)
    emb = np.zeros((n, weights.in_channels, h, w), dtype=grad_f_modes.dtype)
    emb[:, :, :m1, :m2] = grad_f_modes
    grad_x = (h * w) * np.real(np.fft.ifft2(emb, axes=(-2, -1)))
    return grad_x.astype(x.dtype, copy=False), grad_w_pairs


class SpectralConv2d(Module):
    """One spectral mixing layer with trainable complex weights."""

    def __init__(self, in_channels: int, out_channels: int, modes: tuple[int, int],
                 dtype="float32", rng: np.random.Generator | None = None,
                 name: str = "spectral"):
        dtype = as_dtype(dtype)
        rng = rng if rng is not None else np.random.default_rng(0)
        m1, m2 = modes
        if m1 < 1 or m2 < 1:
            raise ConfigError(f"mode counts must be positive, got {modes}")
        scale = 1.0 / (in_channels * out_channels)
        init = scale * rng.uniform(0.0, 1.0, size=(in_channels, out_channels, m1, m2, 2))
        self.weight = Parameter(init.astype(dtype), name=f"{name}.weight")
        self._x: np.ndarray | None = None

    def named_parameters(self):
        yield self.weight.name, self.weight

    @property
    def weights(self) -> SpectralWeights:
        return SpectralWeights(self.weight.data)

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return spectral_conv(x, self.weights)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise ConfigError("backward called before forward")
        gx, gw = spectral_conv_backward(self._x, self.weights, grad)
        self.weight.accumulate_grad(gw)
        self._x = None
        return gx


@dataclass(frozen=True)
class FNOPlusConfig:
    in_channels: int
    out_channels: int
    width: int
    modes: int
    n_layers: int = 4
    proj_hidden: int = 128
    dtype: str = "float32"

    def __post_init__(self):
        if self.n_layers < 1:
            raise ConfigError("need at least one spectral layer")
        if self.modes < 1:
            raise ConfigError("mode count must be positive")


class FNOPlus(Module):
    """Pointwise lift, n_layers of (spectral + pointwise) with GELU on all
    but the last layer, then a two-layer pointwise head with GELU between."""

    def __init__(self, cfg: FNOPlusConfig, seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        c, dtype = cfg.width, cfg.dtype
        self.lift = PointwiseConv2d(cfg.in_channels, c, bias=False,
                                    dtype=dtype, rng=rng, name="lift")
        self.spectral = [
            SpectralConv2d(c, c, (cfg.modes, cfg.modes), dtype=dtype, rng=rng,
                           name=f"layers.{i}.spectral")
            for i in range(cfg.n_layers)
        ]
        self.pointwise = [
            PointwiseConv2d(c, c, bias=True, dtype=dtype, rng=rng, name=f"layers.{i}.pointwise")
            for i in range(cfg.n_layers)
        ]
        self.acts = [GELU() for _ in range(cfg.n_layers - 1)]
        self.proj1 = PointwiseConv2d(c, cfg.proj_hidden, bias=False,
                                     dtype=dtype, rng=rng, name="proj1")
        self.proj_act = GELU()
        self.proj2 = PointwiseConv2d(cfg.proj_hidden, cfg.out_channels, bias=True,
                                     dtype=dtype, rng=rng, name="proj2")

    def children(self):
        out = [self.lift]
        for s, p in zip(self.spectral, self.pointwise):
            out += [s, p]
        out += [self.proj1, self.proj2]
        return out

    def forward(self, a: np.ndarray) -> np.ndarray:
        if a.shape[1] != self.cfg.in_channels:
            raise ConfigError(
                f"model expects {self.cfg.in_channels} input channels, got {a.shape[1]}"
            )
        x = self.lift(a)
        for i in range(self.cfg.n_layers):
            x = self.spectral[i](x) + self.pointwise[i](x)
            if i < self.cfg.n_layers - 1:
                x = self.acts[i](x)
        return self.proj2(self.proj_act(self.proj1(x)))

    def backward(self, grad: np.ndarray) -> np.ndarray:
        g = self.proj1.backward(self.proj_act.backward(self.proj2.backward(grad)))
        for i in reversed(range(self.cfg.n_layers)):
            if i < self.cfg.n_layers - 1:
                g = self.acts[i].backward(g)
            g = self.spectral[i].backward(g) + self.pointwise[i].backward(g)
        return self.lift.backward(g)


def fno_parameter_count(cfg: FNOPlusConfig) -> int:
    """Closed-form trainable scalar count of the assembled spectral model."""
    c = cfg.width
    total = cfg.in_channels * c
    total += cfg.n_layers * (c * c * cfg.modes * cfg.modes * 2)
    total += cfg.n_layers * (c * c + c)
    total += c * cfg.proj_hidden
    total += cfg.proj_hidden * cfg.out_channels + cfg.out_channels
    return total


def build_fno(cfg: FNOPlusConfig, seed: int = 0) -> FNOPlus:
    model = FNOPlus(cfg, seed=seed)
    actual = model.parameter_total()
    expected = fno_parameter_count(cfg)
    if actual != expected:
        raise ConfigError(
            f"parameter enumeration {actual} disagrees with closed form {expected}"
        )
    return model


def fno_plus_forward(a, cfg: FNOPlusConfig, seed: int = 0) -> np.ndarray:
    return build_fno(cfg, seed=seed).forward(np.asarray(a))
