"""Binary tensor files, dataset manifests, z-score normalization, mesh
subsampling, sliding trajectory windows, and synthetic dataset generators."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .tensor import Tensor, as_array

MAGIC = b"DSNT"
FORMAT_VERSION = 1
_DTYPE_TO_CODE = {np.dtype("float32"): 0, np.dtype("float64"): 1}
_CODE_TO_DTYPE = {0: np.dtype("float32"), 1: np.dtype("float64")}
_MAX_RANK = 8


# -- binary tensor files ------------------------------------------------------------

def write_tensor(path, tensor) -> None:
    """Little-endian layout: magic 'DSNT', version u16, dtype u8 (0=float32,
    1=float64), rank u8, then rank u64 dims, then the row-major payload."""
    arr = np.asarray(as_array(tensor))  # tobytes() below emits row-major bytes
    code = _DTYPE_TO_CODE.get(arr.dtype)
    if code is None:
        raise DataError(f"unsupported dtype {arr.dtype} for tensor file")
    if arr.ndim > _MAX_RANK:
        raise DataError(f"rank {arr.ndim} exceeds the maximum of {_MAX_RANK}")
    header = MAGIC + struct.pack("<HBB", FORMAT_VERSION, code, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
    Path(path).write_bytes(header + payload)


def read_tensor(path) -> Tensor:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise DataError(f"{path}: truncated header")
    if raw[:4] != MAGIC:
        raise DataError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    version, code, rank = struct.unpack_from("<HBB", raw, 4)
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version {version}")
    if code not in _CODE_TO_DTYPE:
        raise DataError(f"{path}: unknown dtype code {code}")
    if rank > _MAX_RANK:
        raise DataError(f"{path}: rank {rank} exceeds the maximum of {_MAX_RANK}")
    offset = 8
    if len(raw) < offset + 8 * rank:
        raise DataError(f"{path}: truncated dimension list")
    dims = struct.unpack_from(f"<{rank}Q", raw, offset)
    offset += 8 * rank
    dtype = _CODE_TO_DTYPE[code]
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    expected = offset + count * dtype.itemsize
    if len(raw) != expected:
        raise DataError(f"{path}: payload is {len(raw) - offset} bytes, expected {expected - offset}")
    arr = np.frombuffer(raw, dtype=dtype.newbyteorder("<"), count=count, offset=offset)
    return Tensor(arr.astype(dtype, copy=True).reshape(dims))


# -- manifests ---------------------------------------------------------------------

_REQUIRED_KEYS = ("name", "n_train", "n_test", "inputs", "targets", "mesh")
_ALL_KEYS = _REQUIRED_KEYS + (
    "channels", "normalize", "append_coords", "ns_history", "ns_horizon",
)
_NORMALIZE_POLICIES = ("channel", "global", "none")


@dataclass
class DatasetManifest:
    name: str
    n_train: int
    n_test: int
    inputs: str
    targets: str
    mesh: tuple[int, int]
    channels: tuple[int, int] = (1, 1)
    normalize: str = "channel"
    append_coords: bool = False
    ns_history: int = 0
    ns_horizon: int = 0

    def __post_init__(self):
        if self.normalize not in _NORMALIZE_POLICIES:
            raise DataError(f"unknown normalize policy {self.normalize!r}")
        if self.n_train < 1 or self.n_test < 0:
            raise DataError("n_train must be >= 1 and n_test >= 0")
        if (self.ns_history > 0) != (self.ns_horizon > 0):
            raise DataError("ns_history and ns_horizon must be set together")

    @classmethod
    def read(cls, path) -> "DatasetManifest":
        values = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _ALL_KEYS:
                raise DataError(f"{path}:{lineno}: unknown manifest key {key!r}")
            if key in values:
                raise DataError(f"{path}:{lineno}: duplicate manifest key {key!r}")
            values[key] = value
        missing = [k for k in _REQUIRED_KEYS if k not in values]
        if missing:
            raise DataError(f"{path}: missing manifest keys: {', '.join(missing)}")
        h, _, w = values["mesh"].partition("x")
        try:
            mesh = (int(h), int(w))
        except ValueError as exc:
            raise DataError(f"{path}: mesh must look like 64x64") from exc
        channels = (1, 1)
        if "channels" in values:
            parts = values["channels"].split(",")
            if len(parts) != 2:
                raise DataError(f"{path}: channels must look like 2,1")
            channels = (int(parts[0]), int(parts[1]))
        return cls(
            name=values["name"],
            n_train=int(values["n_train"]),
            n_test=int(values["n_test"]),
            inputs=values["inputs"],
            targets=values["targets"],
            mesh=mesh,
            channels=channels,
            normalize=values.get("normalize", "channel"),
            append_coords=values.get("append_coords", "false").lower() == "true",
            ns_history=int(values.get("ns_history", 0)),
            ns_horizon=int(values.get("ns_horizon", 0)),
        )

    def write(self, path) -> None:
        lines = [
            f"name = {self.name}",
            f"n_train = {self.n_train}",
            f"n_test = {self.n_test}",
            f"inputs = {self.inputs}",
            f"targets = {self.targets}",
            f"mesh = {self.mesh[0]}x{self.mesh[1]}",
            f"channels = {self.channels[0]},{self.channels[1]}",
            f"normalize = {self.normalize}",
            f"append_coords = {'true' if self.append_coords else 'false'}",
            f"ns_history = {self.ns_history}",
            f"ns_horizon = {self.ns_horizon}",
        ]
        Path(path).write_text("\n".join(lines) + "\n")


# -- normalization --------------------------------------------------------------------

EPSILON = 1e-8


@dataclass
class Normalizer:
    """Affine z-score transform fitted on the training split only."""
    mean: np.ndarray
    std: np.ndarray
    policy: str = "channel"

    @classmethod
    def fit(cls, data: np.ndarray, policy: str = "channel") -> "Normalizer":
        if policy not in _NORMALIZE_POLICIES:
            raise ConfigError(f"unknown normalize policy {policy!r}")
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 4:
            raise ConfigError("normalizer expects (samples, channels, H, W)")
        if policy == "none":
            c = data.shape[1]
            return cls(np.zeros((c, 1, 1)), np.ones((c, 1, 1)), policy)
        if policy == "channel":
            mean = data.mean(axis=(0, 2, 3))[:, None, None]
            std = data.std(axis=(0, 2, 3))[:, None, None]
        else:  # global
            mean = np.full((1, 1, 1), data.mean())
            std = np.full((1, 1, 1), data.std())
        return cls(mean, np.maximum(std, EPSILON), policy)

    def encode(self, x: np.ndarray) -> np.ndarray:
        return ((np.asarray(x, dtype=np.float64) - self.mean) / self.std).astype(x.dtype)

    def decode(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) * self.std + self.mean).astype(x.dtype)


# -- samples and bundles -----------------------------------------------------------------

@dataclass
class FieldSample:
    """One mesh-resolved input/target pair in physical units."""
    input: np.ndarray
    target: np.ndarray
    index: int


@dataclass
class DatasetBundle:
    manifest: DatasetManifest
    train_x_enc: np.ndarray
    train_y_phys: np.ndarray
    test_x_enc: np.ndarray
    test_y_phys: np.ndarray
    train_x_phys: np.ndarray
    test_x_phys: np.ndarray
    normalizer_in: Normalizer
    normalizer_out: Normalizer

    @property
    def in_mean(self):
        return self.normalizer_in.mean

    @property
    def in_std(self):
        return self.normalizer_in.std

    @property
    def out_mean(self):
        return self.normalizer_out.mean

    @property
    def out_std(self):
        return self.normalizer_out.std

    def train_samples(self) -> list[FieldSample]:
        return [FieldSample(x, y, i) for i, (x, y) in
                enumerate(zip(self.train_x_phys, self.train_y_phys))]

    def test_samples(self) -> list[FieldSample]:
        return [FieldSample(x, y, i) for i, (x, y) in
                enumerate(zip(self.test_x_phys, self.test_y_phys))]


def append_coord_channels(x: np.ndarray) -> np.ndarray:
    """Concatenate normalized row/column coordinate channels (index / (extent-1))."""
    n, _, h, w = x.shape
    rows = np.linspace(0.0, 1.0, h) if h > 1 else np.zeros(1)
    cols = np.linspace(0.0, 1.0, w) if w > 1 else np.zeros(1)
    grid_r = np.broadcast_to(rows[:, None], (h, w))
    grid_c = np.broadcast_to(cols[None, :], (h, w))
    coords = np.stack([grid_r, grid_c]).astype(x.dtype)
    coords = np.broadcast_to(coords[None], (n, 2, h, w))
    return np.concatenate([x, coords], axis=1)


def darcy_subsample(field: np.ndarray, stride: int) -> np.ndarray:
    """Every stride-th mesh point along the last two axes; stride must divide
    extent-1 so the final boundary point is retained."""
    if stride < 1:
        raise DataError("subsample stride must be >= 1")
    h, w = field.shape[-2], field.shape[-1]
    if (h - 1) % stride != 0 or (w - 1) % stride != 0:
        raise DataError(f"stride {stride} does not divide mesh extents {h - 1}, {w - 1}")
    return field[..., ::stride, ::stride]


def ns_windows(trajectories: np.ndarray, history: int, horizon: int, stride: int = 1):
    """Sliding windows over (S, T, H, W) trajectories: inputs are `history`
    consecutive frames, targets the following `horizon` frames."""
    if trajectories.ndim != 4:
        raise DataError("trajectories must be (samples, frames, H, W)")
    s, t, h, w = trajectories.shape
    if history < 1 or horizon < 1:
        raise DataError("history and horizon must be >= 1")
    if history + horizon > t:
        raise DataError(f"window of {history}+{horizon} frames exceeds trajectory length {t}")
    starts = range(history, t - horizon + 1, stride)
    xs, ys = [], []
    for t0 in starts:
        xs.append(trajectories[:, t0 - history : t0])
        ys.append(trajectories[:, t0 : t0 + horizon])
    x = np.concatenate(xs, axis=0)
    y = np.concatenate(ys, axis=0)
    return x, y


def load_dataset(manifest_path, dtype: str = "float32") -> DatasetBundle:
    """Read a manifest and its tensor files, split train/test (first n_train,
    last n_test), fit normalizers on the training split, and return encoded
    inputs alongside physical-unit targets."""
    manifest_path = Path(manifest_path)
    manifest = DatasetManifest.read(manifest_path)
    base = manifest_path.parent
    inputs = read_tensor(base / manifest.inputs).data.astype(dtype)
    targets = read_tensor(base / manifest.targets).data.astype(dtype)

    if manifest.ns_history > 0:
        return _load_ns(manifest, inputs)

    if inputs.ndim == 3:
        inputs = inputs[:, None]
    if targets.ndim == 3:
        targets = targets[:, None]
    if inputs.ndim != 4 or targets.ndim != 4:
        raise DataError("inputs and targets must be (samples, channels, H, W)")
    if inputs.shape[0] != targets.shape[0]:
        raise DataError("inputs and targets disagree on sample count")
    if inputs.shape[-2:] != tuple(manifest.mesh):
        raise DataError(
            f"mesh mismatch: tensors are {inputs.shape[-2:]}, manifest says {tuple(manifest.mesh)}")
    total = inputs.shape[0]
    if manifest.n_train + manifest.n_test > total:
        raise DataError(
            f"n_train + n_test = {manifest.n_train + manifest.n_test} exceeds {total} samples")

    if manifest.append_coords:
        inputs = append_coord_channels(inputs)

    train_x = inputs[: manifest.n_train]
    train_y = targets[: manifest.n_train]
    test_x = inputs[total - manifest.n_test :] if manifest.n_test else inputs[:0]
    test_y = targets[total - manifest.n_test :] if manifest.n_test else targets[:0]

    norm_in = Normalizer.fit(train_x, manifest.normalize)
    norm_out = Normalizer.fit(train_y, manifest.normalize)
    return DatasetBundle(
        manifest=manifest,
        train_x_enc=norm_in.encode(train_x),
        train_y_phys=train_y,
        test_x_enc=norm_in.encode(test_x) if manifest.n_test else test_x,
        test_y_phys=test_y,
        train_x_phys=train_x,
        test_x_phys=test_x,
        normalizer_in=norm_in,
        normalizer_out=norm_out,
    )


def _load_ns(manifest: DatasetManifest, trajectories: np.ndarray) -> DatasetBundle:
    if trajectories.ndim != 4:
        raise DataError("trajectory file must be (samples, frames, H, W)")
    total = trajectories.shape[0]
    if manifest.n_train + manifest.n_test > total:
        raise DataError(
            f"n_train + n_test = {manifest.n_train + manifest.n_test} exceeds {total} trajectories")
    history, horizon = manifest.ns_history, manifest.ns_horizon
    train_traj = trajectories[: manifest.n_train]
    test_traj = trajectories[total - manifest.n_test :]

    # One-step training pairs from every sliding window position.
    train_x, train_y = ns_windows(train_traj, history, 1)
    norm_in = Normalizer.fit(train_x, manifest.normalize)
    norm_out = Normalizer.fit(train_y, manifest.normalize)

    # Held-out rollouts start from the first window of each trajectory.
    test_x = test_traj[:, :history]
    test_y = test_traj[:, history : history + horizon]
    return DatasetBundle(
        manifest=manifest,
        train_x_enc=norm_in.encode(train_x),
        train_y_phys=train_y,
        test_x_enc=test_x,  # rollout evaluation encodes step by step
        test_y_phys=test_y,
        train_x_phys=train_x,
        test_x_phys=test_x,
        normalizer_in=norm_in,
        normalizer_out=norm_out,
    )


# -- synthetic datasets ---------------------------------------------------------------------

def _binomial_blur(field: np.ndarray, passes: int, circular: bool = False) -> np.ndarray:
    """Separable [1,2,1]/4 smoothing along the last two axes."""
    out = field.astype(np.float64)
    mode = "wrap" if circular else "edge"
    for _ in range(passes):
        p = np.pad(out, [(0, 0)] * (out.ndim - 2) + [(1, 1), (1, 1)], mode=mode)
        out = (p[..., :-2, 1:-1] + 2.0 * p[..., 1:-1, 1:-1] + p[..., 2:, 1:-1]) / 4.0
        p = np.pad(out, [(0, 0)] * (out.ndim - 2) + [(1, 1), (1, 1)], mode=mode)
        out = (p[..., 1:-1, :-2] + 2.0 * p[..., 1:-1, 1:-1] + p[..., 1:-1, 2:]) / 4.0
    return out


def _random_smooth_fields(rng, n: int, size: int, cutoff: int) -> np.ndarray:
    """Random fields with spectral support below `cutoff`, unit-ish scale."""
    spectrum = np.zeros((n, size, size // 2 + 1), dtype=np.complex128)
    kx = np.minimum(np.arange(size), size - np.arange(size))[:, None]
    ky = np.arange(size // 2 + 1)[None, :]
    mask = (kx <= cutoff) & (ky <= cutoff)
    coeffs = rng.standard_normal((n, size, size // 2 + 1)) \
        + 1j * rng.standard_normal((n, size, size // 2 + 1))
    decay = 1.0 / (1.0 + kx**2 + ky**2)
    spectrum[:, mask] = (coeffs * decay)[:, mask]
    fields = np.fft.irfft2(spectrum, s=(size, size))
    std = fields.reshape(n, -1).std(axis=1, keepdims=True)
    return (fields.reshape(n, -1) / np.maximum(std, 1e-12)).reshape(n, size, size)


def synthetic_darcy_fields(n: int, size: int = 64, seed: int = 0):
    """Smooth random coefficient fields and a fixed nonlinear local response:
    target = tanh(2 * blur(a)). Returns (inputs (n,1,H,W), targets (n,1,H,W))."""
    rng = np.random.default_rng(seed)
    a = _random_smooth_fields(rng, n, size, cutoff=6)
    u = np.tanh(2.0 * _binomial_blur(a, passes=4))
    return a[:, None].astype(np.float32), u[:, None].astype(np.float32)


def synthetic_ns_trajectories(n: int, size: int = 64, frames: int = 24, seed: int = 0):
    """Periodic scalar fields evolved by a fixed smoothing + drift rule,
    shaped (n, frames, H, W)."""
    rng = np.random.default_rng(seed)
    w = _random_smooth_fields(rng, n, size, cutoff=8)
    out = np.empty((n, frames, size, size), dtype=np.float64)
    out[:, 0] = w
    for t in range(1, frames):
        prev = out[:, t - 1]
        out[:, t] = 0.9 * _binomial_blur(prev, passes=1, circular=True) \
            + 0.1 * np.roll(prev, shift=(1, 2), axis=(-2, -1))
    return out.astype(np.float32)


def make_synthetic_darcy(directory, n_train: int, n_test: int, size: int = 64,
                         seed: int = 0) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    a, u = synthetic_darcy_fields(n_train + n_test, size=size, seed=seed)
    write_tensor(d / "inputs.dsnt", a)
    write_tensor(d / "targets.dsnt", u)
    manifest = DatasetManifest(
        name="synthetic-darcy",
        n_train=n_train,
        n_test=n_test,
        inputs="inputs.dsnt",
        targets="targets.dsnt",
        mesh=(size, size),
        channels=(1, 1),
        normalize="channel",
    )
    path = d / "manifest.txt"
    manifest.write(path)
    return path


def make_synthetic_ns(directory, n_train: int, n_test: int, size: int = 32,
                      frames: int = 24, history: int = 10, horizon: int = 10,
                      seed: int = 0) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    traj = synthetic_ns_trajectories(n_train + n_test, size=size, frames=frames, seed=seed)
    write_tensor(d / "trajectories.dsnt", traj)
    manifest = DatasetManifest(
        name="synthetic-ns",
        n_train=n_train,
        n_test=n_test,
        inputs="trajectories.dsnt",
        targets="trajectories.dsnt",
        mesh=(size, size),
        channels=(history, 1),
        normalize="global",
        ns_history=history,
        ns_horizon=horizon,
    )
    path = d / "manifest.txt"
    manifest.write(path)
    return path
