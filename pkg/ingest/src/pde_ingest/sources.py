"""Benchmark contracts and the conversion request type.

Each benchmark fixes the mesh the emitted tensors must land on, the channel
counts, the normalization policy the manifest declares, the default
train/test split, and for the time-dependent benchmark the frame layout.
Converted tensors are validated against these before anything is written.
"""
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class BenchmarkContract:
    name: str
    mesh: tuple[int, int]
    in_channels: int
    out_channels: int
    normalize: str
    n_train: int
    n_test: int
    default_axes: str
    default_stride: int = 1
    frames: int = 0            # time-dependent benchmarks only
    history: int = 0
    horizon: int = 0


BENCHMARKS = {
    "airfoil": BenchmarkContract(
        name="airfoil", mesh=(221, 51), in_channels=2, out_channels=1,
        normalize="channel", n_train=1000, n_test=200, default_axes="nhw",
    ),
    "pipe": BenchmarkContract(
        name="pipe", mesh=(129, 129), in_channels=2, out_channels=1,
        normalize="channel", n_train=1000, n_test=200, default_axes="nhw",
    ),
    "darcy": BenchmarkContract(
        name="darcy", mesh=(85, 85), in_channels=1, out_channels=1,
        normalize="channel", n_train=1000, n_test=200, default_axes="nhw",
        default_stride=5,
    ),
    "ns": BenchmarkContract(
        name="ns", mesh=(64, 64), in_channels=10, out_channels=1,
        normalize="global", n_train=1000, n_test=200, default_axes="nhwt",
        frames=20, history=10, horizon=10,
    ),
}


@dataclass
class SourceSpec:
    """One conversion request: which benchmark, which container files and
    variables feed each role, how the stored axes are ordered, and where the
    converted dataset goes. Sample counts and the mesh stride may be
    overridden for subsets; the mesh itself may not."""

    benchmark: str
    inputs: list  # list of (path, variable) pairs, stacked along channels
    targets: list = field(default_factory=list)
    out_dir: Path = Path(".")
    axes: str = ""        # empty selects the benchmark default
    stride: int = 0       # 0 selects the benchmark default
    n_train: int = 0      # 0 selects the benchmark default
    n_test: int = -1      # -1 selects the benchmark default

    def __post_init__(self):
        if self.benchmark not in BENCHMARKS:
            raise ConfigError(
                f"unknown benchmark {self.benchmark!r}; "
                f"expected one of {', '.join(sorted(BENCHMARKS))}"
            )
        if not self.inputs:
            raise ConfigError("at least one input variable is required")
        contract = self.contract
        if contract.frames and self.targets:
            raise ConfigError(
                f"{self.benchmark} stores whole trajectories; they serve as "
                "both inputs and targets, so no target variable is accepted"
            )
        if not contract.frames and not self.targets:
            raise ConfigError("a target variable is required")
        if contract.frames and len(self.inputs) != 1:
            raise ConfigError(
                f"{self.benchmark} takes exactly one trajectory variable, "
                f"got {len(self.inputs)}"
            )
        self.out_dir = Path(self.out_dir)
        if self.stride < 0:
            raise ConfigError(f"stride must be positive, got {self.stride}")

    @property
    def contract(self) -> BenchmarkContract:
        return BENCHMARKS[self.benchmark]

    @property
    def effective_axes(self) -> str:
        return self.axes or self.contract.default_axes

    @property
    def effective_stride(self) -> int:
        return self.stride or self.contract.default_stride

    @property
    def split(self) -> tuple[int, int]:
        n_train = self.n_train or self.contract.n_train
        n_test = self.contract.n_test if self.n_test < 0 else self.n_test
        return n_train, n_test
