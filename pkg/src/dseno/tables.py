"""Registry of the named model variants (the model zoo).

Every published row of each benchmark family is reconstructible by name:
depth ladders Airfoil-A..G, Pipe-A..G, Darcy-A..F, NS-A; the "w/o SE",
"w/o SE (PM)" and "-alt" variants; the per-resolution Darcy rows; and the
spectral-baseline rows per benchmark and mode count. Names are normalized
so "Model Airfoil-G w/o SE (PM)" and "airfoil-g-wo-se-pm" resolve alike.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .blocks import DSBlockConfig, SEConfig
from .errors import ConfigError
from .model import ModelConfig
from .spectral import FNOPlusConfig


@dataclass(frozen=True)
class BenchmarkFamily:
    name: str
    width: int
    in_channels: int
    out_channels: int
    k1: int
    bias1: bool
    k2: int
    bias2: bool
    padding_mode: str = "zero"


AIRFOIL = BenchmarkFamily("airfoil", width=64, in_channels=2, out_channels=1,
                          k1=3, bias1=True, k2=5, bias2=False)
PIPE = BenchmarkFamily("pipe", width=96, in_channels=2, out_channels=1,
                       k1=3, bias1=True, k2=3, bias2=True)
DARCY = BenchmarkFamily("darcy", width=48, in_channels=1, out_channels=1,
                        k1=3, bias1=True, k2=5, bias2=False)
NS = BenchmarkFamily("ns", width=64, in_channels=10, out_channels=1,
                     k1=3, bias1=True, k2=3, bias2=True, padding_mode="circular")

FAMILIES = {f.name: f for f in (AIRFOIL, PIPE, DARCY, NS)}

# Depth ladders: per row, the (d_x, d_y) schedule, one pair per block.
_AIRFOIL_DILATIONS = {
    "a": ([16], [6]),
    "b": ([16, 54], [4, 10]),
    "c": ([16, 48, 2], [1, 6, 4]),
    "d": ([16, 56, 30, 2], [1, 2, 10, 4]),
    "e": ([16, 56, 36, 24, 1], [1, 2, 10, 6, 1]),
    "f": ([16, 56, 42, 36, 24, 1], [1, 2, 8, 12, 6, 1]),
    "g": ([16, 56, 42, 36, 32, 24, 1], [1, 2, 8, 12, 6, 2, 1]),
}
_AIRFOIL_ALT = {"g": ([20, 52, 46, 38, 30, 20, 2], [2, 4, 8, 10, 8, 4, 2])}

_PIPE_DILATIONS = {
    "a": [9],
    "b": [23, 1],
    "c": [23, 11, 1],
    "d": [23, 15, 7, 1],
    "e": [23, 15, 9, 3, 1],
    "f": [25, 19, 11, 7, 3, 1],
    "g": [23, 17, 13, 9, 7, 3, 1],
}
_PIPE_ALT = {"g": [25, 19, 11, 9, 5, 3, 1]}

_DARCY_DILATIONS = {
    "a": [7],
    "b": [1, 19],
    "c": [1, 11, 19],
    "d": [1, 7, 13, 19],
    "e": [1, 5, 9, 13, 19],
    "f": [1, 3, 5, 9, 13, 19],
}
_DARCY_ALT = {"f": [1, 3, 7, 11, 15, 21]}

_NS_DILATIONS = {"a": [15, 25, 17, 13, 7, 5, 3, 1]}
_NS_ALT = {"a": [21, 27, 19, 11, 9, 7, 3, 1]}

# Per-resolution Darcy rows: resolution -> dilation schedule.
DARCY_RESOLUTION_DILATIONS = {
    32: [1, 2, 6],
    64: [1, 3, 5, 7, 9, 13, 15],
    128: [1, 5, 9, 15, 21, 27],
    256: [1, 5, 7, 15, 23, 39, 61],
}

# Spectral-baseline mode ladders per benchmark.
FNO_MODE_LADDERS = {
    "airfoil": (8, 16, 24),
    "pipe": (8, 16, 32),
    "darcy": (8, 16, 32, 42),
    "ns": (8, 16, 32),
}


def _family_dilations(family: str, alt: bool):
    return {
        "airfoil": (_AIRFOIL_ALT if alt else _AIRFOIL_DILATIONS),
        "pipe": (_PIPE_ALT if alt else _PIPE_DILATIONS),
        "darcy": (_DARCY_ALT if alt else _DARCY_DILATIONS),
        "ns": (_NS_ALT if alt else _NS_DILATIONS),
    }[family]


def _make_config(family: BenchmarkFamily, dx, dy, se: bool, pm: bool,
                 width: int | None = None) -> ModelConfig:
    c = width if width is not None else family.width
    blocks = tuple(
        DSBlockConfig(
            width=c,
            dilation=(int(lx), int(ly)),
            k1=family.k1, bias1=family.bias1,
            k2=family.k2, bias2=family.bias2,
            se=SEConfig(channels=c, reduction=1) if se else None,
            pm=pm,
            padding_mode=family.padding_mode,
        )
        for lx, ly in zip(dx, dy)
    )
    return ModelConfig(
        in_channels=family.in_channels,
        out_channels=family.out_channels,
        width=c,
        blocks=blocks,
    )


def normalize_name(name: str) -> str:
    s = name.strip().lower()
    s = s.replace("w/o", "wo")
    tokens = re.findall(r"[a-z0-9]+", s)
    if tokens and tokens[0] == "model":
        tokens = tokens[1:]
    return "-".join(tokens)


def _build_registry():
    registry = {}

    def add(name, builder):
        registry[normalize_name(name)] = builder

    for family, ladder, alt_ladder in (
        (AIRFOIL, _AIRFOIL_DILATIONS, _AIRFOIL_ALT),
        (PIPE, _PIPE_DILATIONS, _PIPE_ALT),
        (DARCY, _DARCY_DILATIONS, _DARCY_ALT),
        (NS, _NS_DILATIONS, _NS_ALT),
    ):
        for letter, sched in ladder.items():
            dx, dy = sched if isinstance(sched, tuple) else (sched, sched)
            base = f"{family.name}-{letter}"
            add(base, lambda f=family, dx=dx, dy=dy: _make_config(f, dx, dy, se=True, pm=False))
            if letter in alt_ladder or letter == max(ladder):
                # Variant rows exist at the deepest published depth.
                add(f"{base} w/o SE",
                    lambda f=family, dx=dx, dy=dy: _make_config(f, dx, dy, se=False, pm=False))
                add(f"{base} w/o SE (PM)",
                    lambda f=family, dx=dx, dy=dy: _make_config(f, dx, dy, se=False, pm=True))
        for letter, sched in alt_ladder.items():
            dx, dy = sched if isinstance(sched, tuple) else (sched, sched)
            add(f"{family.name}-{letter}-alt",
                lambda f=family, dx=dx, dy=dy: _make_config(f, dx, dy, se=True, pm=False))

    for res, sched in DARCY_RESOLUTION_DILATIONS.items():
        add(f"darcy-res{res}",
            lambda sched=sched: _make_config(DARCY, sched, sched, se=True, pm=False))
    return registry


_REGISTRY = _build_registry()


def list_table_rows() -> list[str]:
    return sorted(_REGISTRY)


def reconstruct_table_config(name: str, width: int | None = None) -> ModelConfig:
    """ModelConfig for a named variant; optional width override for sweeps."""
    key = normalize_name(name)
    if key not in _REGISTRY:
        raise ConfigError(
            f"unknown table-row name {name!r}; known rows: {', '.join(list_table_rows())}"
        )
    cfg = _REGISTRY[key]()
    if width is not None and width != cfg.width:
        family_name = key.split("-")[0]
        family = FAMILIES[family_name]
        base = _REGISTRY[key]()
        dx = [b.dilation[0] for b in base.blocks]
        dy = [b.dilation[1] for b in base.blocks]
        se = base.blocks[0].se is not None
        pm = base.blocks[0].pm
        cfg = _make_config(family, dx, dy, se=se, pm=pm, width=width)
    return cfg


def reconstruct_fno_config(benchmark: str, modes: int) -> FNOPlusConfig:
    """Spectral-baseline config for a benchmark at a given mode count."""
    b = benchmark.strip().lower()
    if b not in FAMILIES:
        raise ConfigError(f"unknown benchmark {benchmark!r}; known: {', '.join(FAMILIES)}")
    fam = FAMILIES[b]
    return FNOPlusConfig(
        in_channels=fam.in_channels,
        out_channels=fam.out_channels,
        width=fam.width,
        modes=int(modes),
    )


def list_fno_rows() -> list[str]:
    return [f"fno-{b}-m{m}" for b in FAMILIES for m in FNO_MODE_LADDERS[b]]


def parse_fno_row(name: str):
    """Split 'fno-<benchmark>-m<modes>' into (benchmark, modes)."""
    m = re.fullmatch(r"fno-([a-z]+)-m(\d+)", normalize_name(name))
    if not m:
        raise ConfigError(f"unknown spectral-baseline row {name!r}")
    return m.group(1), int(m.group(2))
