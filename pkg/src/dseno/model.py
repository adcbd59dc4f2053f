"""Model assembly: pointwise lift, a stack of DS blocks, and a two-layer
pointwise projection head, plus the closed-form parameter counter and the
receptive-field calculator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import DSBlock, DSBlockConfig
from .errors import ConfigError
from .modules import GELU, Module, PointwiseConv2d


@dataclass(frozen=True)
class ModelConfig:
    """Complete architecture description, sufficient to rebuild any model
    variant: channel counts, width, per-block settings, projection width.

    Bias convention: the lift and the projection hidden layer are bias-free;
    the projection output layer carries a bias; per-block conv biases follow
    each block's flags. The closed-form counter below mirrors this exactly.
    """

    in_channels: int
    out_channels: int
    width: int
    blocks: tuple[DSBlockConfig, ...]
    proj_hidden: int = 128
    append_coords: bool = False
    dtype: str = "float32"

    def __post_init__(self):
        if not self.blocks:
            raise ConfigError("model needs at least one block")
        for b in self.blocks:
            if b.width != self.width:
                raise ConfigError(
                    f"block width {b.width} differs from model width {self.width}"
                )
        if min(self.in_channels, self.out_channels, self.width, self.proj_hidden) < 1:
            raise ConfigError("channel counts and widths must be positive")


class DSENO(Module):
    """u = Q(B_n(...B_1(P(a))...)): resolution-preserving end to end."""

    def __init__(self, cfg: ModelConfig, seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        dtype = cfg.dtype
        self.lift = PointwiseConv2d(cfg.in_channels, cfg.width, bias=False,
                                    dtype=dtype, rng=rng, name="lift")
        self.blocks = [
            DSBlock(bc, dtype=dtype, rng=rng, name=f"blocks.{i}")
            for i, bc in enumerate(cfg.blocks)
        ]
        self.proj1 = PointwiseConv2d(cfg.width, cfg.proj_hidden, bias=False,
                                     dtype=dtype, rng=rng, name="proj1")
        self.proj_act = GELU()
        self.proj2 = PointwiseConv2d(cfg.proj_hidden, cfg.out_channels, bias=True,
                                     dtype=dtype, rng=rng, name="proj2")

    def children(self):
        return [self.lift, *self.blocks, self.proj1, self.proj2]

    def forward(self, a: np.ndarray) -> np.ndarray:
        if a.ndim != 4:
            raise ConfigError(f"model input must be rank 4, got shape {a.shape}")
        if a.shape[1] != self.cfg.in_channels:
            raise ConfigError(
                f"model expects {self.cfg.in_channels} input channels, got {a.shape[1]}"
            )
        x = self.lift(a)
        for block in self.blocks:
            x = block(x)
        return self.proj2(self.proj_act(self.proj1(x)))

    def backward(self, grad: np.ndarray) -> np.ndarray:
        g = self.proj1.backward(self.proj_act.backward(self.proj2.backward(grad)))
        for block in reversed(self.blocks):
            g = block.backward(g)
        return self.lift.backward(g)


def block_parameter_count(b: DSBlockConfig) -> int:
    c = b.width
    total = c * c * b.k1 * b.k1 + (c if b.bias1 else 0)
    total += c * c * b.k2 * b.k2 + (c if b.bias2 else 0)
    if b.se is not None:
        r = b.se.reduced
        total += (c * r + r) + (r * c + c)
    if b.pm:
        total += 2 * (c * c + c)
    return total


def parameter_count(cfg: ModelConfig) -> int:
    """Exact trainable scalar count of the assembled model."""
    total = cfg.in_channels * cfg.width
    total += sum(block_parameter_count(b) for b in cfg.blocks)
    total += cfg.width * cfg.proj_hidden
    total += cfg.proj_hidden * cfg.out_channels + cfg.out_channels
    return total


def receptive_field(cfg: ModelConfig) -> tuple[int, int]:
    """(rf_x, rf_y): per axis, 1 + sum over all convolutions of l*(k-1)."""
    rf_x = rf_y = 1
    for b in cfg.blocks:
        lx, ly = b.dilation
        rf_x += lx * (b.k1 - 1) + lx * (b.k2 - 1)
        rf_y += ly * (b.k1 - 1) + ly * (b.k2 - 1)
    return rf_x, rf_y


def build_model(cfg: ModelConfig, seed: int = 0) -> DSENO:
    model = DSENO(cfg, seed=seed)
    actual = model.parameter_total()
    expected = parameter_count(cfg)
    if actual != expected:
        raise ConfigError(
            f"parameter enumeration {actual} disagrees with closed form {expected}"
        )
    return model


def dseno_forward(a, cfg: ModelConfig, seed: int = 0) -> np.ndarray:
    """Build-and-run convenience used by shape tests; training code keeps the
    model object instead."""
    return build_model(cfg, seed=seed).forward(np.asarray(a))
