"""Squeeze-and-excitation gating and the DS block (dilated conv pair +
optional SE or parameter-matched pointwise pair + residual + GELU)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .modules import GELU, DilatedConv2d, GlobalAvgPool, Module, PointwiseConv2d, Sigmoid


@dataclass(frozen=True)
class SEConfig:
    """Channel-gate shape: squeeze C to C/r and expand back."""

    channels: int
    reduction: int = 1

    def __post_init__(self):
        if self.reduction < 1:
            raise ConfigError(f"SE reduction must be positive, got {self.reduction}")
        if self.channels % self.reduction != 0:
            raise ConfigError(
                f"channels {self.channels} not divisible by reduction {self.reduction}"
            )

    @property
    def reduced(self) -> int:
        return self.channels // self.reduction


@dataclass(frozen=True)
class DSBlockConfig:
    """One DS block: two dilated convs sharing (l_x, l_y), then SE gating,
    or two bias-carrying pointwise convs (parameter-matched), or neither."""

    width: int
    dilation: tuple[int, int]
    k1: int = 3
    bias1: bool = True
    k2: int = 3
    bias2: bool = True
    se: SEConfig | None = None
    pm: bool = False
    padding_mode: str = "zero"

    def __post_init__(self):
        if self.se is not None and self.pm:
            raise ConfigError("a block carries either SE or the parameter-matched pair, not both")
        if self.se is not None and self.se.channels != self.width:
            raise ConfigError(
                f"SE channels {self.se.channels} must equal block width {self.width}"
            )
        lx, ly = self.dilation
        if lx < 1 or ly < 1:
            raise ConfigError(f"dilation must be positive, got {self.dilation}")


class SEBlock(Module):
    """z = pool(u); s = sigmoid(W2 gelu(W1 z + b1) + b2); out = s * u."""

    def __init__(self, cfg: SEConfig, dtype="float32",
                 rng: np.random.Generator | None = None, name: str = "se"):
        self.cfg = cfg
        self.pool = GlobalAvgPool()
        self.reduce = PointwiseConv2d(cfg.channels, cfg.reduced, bias=True,
                                      dtype=dtype, rng=rng, name=f"{name}.reduce")
        self.act = GELU()
        self.expand = PointwiseConv2d(cfg.reduced, cfg.channels, bias=True,
                                      dtype=dtype, rng=rng, name=f"{name}.expand")
        self.gate = Sigmoid()
        self._u: np.ndarray | None = None
        self._s: np.ndarray | None = None

    def children(self):
        return [self.reduce, self.expand]

    def forward(self, u: np.ndarray) -> np.ndarray:
        if u.shape[1] != self.cfg.channels:
            raise ConfigError(f"SE expects {self.cfg.channels} channels, got {u.shape[1]}")
        z = self.pool(u)
        s = self.gate(self.expand(self.act(self.reduce(z))))
        self._u, self._s = u, s
        return s * u

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self._u is None:
            raise ConfigError("backward called before forward")
        u, s = self._u, self._s
        grad_u_direct = grad * s
        grad_s = (grad * u).sum(axis=(2, 3), keepdims=True)
        grad_z = self.reduce.backward(self.act.backward(self.expand.backward(
            self.gate.backward(grad_s))))
        grad_u_pool = self.pool.backward(grad_z)
        self._u = self._s = None
        return grad_u_direct + grad_u_pool

    def scales(self, u: np.ndarray) -> np.ndarray:
        """The per-channel gate values s of shape (N, C, 1, 1) for input u."""
        z = self.pool(u)
        return self.gate(self.expand(self.act(self.reduce(z))))


class DSBlock(Module):
    """h = conv2(gelu(conv1(x))); optional pointwise pair; y = SE(h) or h;
    output = gelu(x + y). Resolution-preserving by construction."""

    def __init__(self, cfg: DSBlockConfig, dtype="float32",
                 rng: np.random.Generator | None = None, name: str = "block"):
        self.cfg = cfg
        c = cfg.width
        self.conv1 = DilatedConv2d(c, c, cfg.k1, dilation=cfg.dilation, bias=cfg.bias1,
                                   padding_mode=cfg.padding_mode, dtype=dtype, rng=rng,
                                   name=f"{name}.conv1")
        self.act1 = GELU()
        self.conv2 = DilatedConv2d(c, c, cfg.k2, dilation=cfg.dilation, bias=cfg.bias2,
                                   padding_mode=cfg.padding_mode, dtype=dtype, rng=rng,
                                   name=f"{name}.conv2")
        if cfg.pm:
            self.pm1 = PointwiseConv2d(c, c, bias=True, dtype=dtype, rng=rng, name=f"{name}.pm1")
            self.pm_act = GELU()
            self.pm2 = PointwiseConv2d(c, c, bias=True, dtype=dtype, rng=rng, name=f"{name}.pm2")
        else:
            self.pm1 = self.pm_act = self.pm2 = None
        self.se = SEBlock(cfg.se, dtype=dtype, rng=rng, name=f"{name}.se") if cfg.se else None
        self.act_out = GELU()

    def children(self):
        out = [self.conv1, self.conv2]
        if self.pm1 is not None:
            out += [self.pm1, self.pm2]
        if self.se is not None:
            out.append(self.se)
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1] != self.cfg.width:
            raise ConfigError(f"block expects width {self.cfg.width}, got {x.shape[1]}")
        h = self.conv2(self.act1(self.conv1(x)))
        if self.pm1 is not None:
            h = self.pm2(self.pm_act(self.pm1(h)))
        y = self.se(h) if self.se is not None else h
        return self.act_out(x + y)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        grad_sum = self.act_out.backward(grad)
        grad_y = grad_sum
        grad_h = self.se.backward(grad_y) if self.se is not None else grad_y
        if self.pm1 is not None:
            grad_h = self.pm1.backward(self.pm_act.backward(self.pm2.backward(grad_h)))
        grad_x = self.conv1.backward(self.act1.backward(self.conv2.backward(grad_h)))
        return grad_x + grad_sum


def se_forward(u, block: SEBlock):
    """Functional view of SEBlock.forward, for tests and straight-line use."""
    return block.forward(np.asarray(u))


def ds_block_forward(x, block: DSBlock):
    """Functional view of DSBlock.forward."""
    return block.forward(np.asarray(x))
