"""Container loading, axis normalization, and the conversion pipeline.

convert() reads the declared variables out of MAT or NumPy containers,
permutes them into the canonical (sample, channel, height, width) layout
(or (sample, frame, height, width) for trajectories), subsamples the mesh,
casts to float32, validates every shape against the benchmark contract, and
writes the tensor files, the manifest, and a SHA-256 checksum list. Two runs
over the same sources produce byte-identical output.
"""
from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import scipy.io

from .container import write_tensor
from .errors import ConfigError, DataError
from .manifest import write_manifest
from .sources import SourceSpec

CHECKSUM_FILE = "checksums.sha256"


# -- reading variables out of source containers -----------------------------------

def _mat_variables(path: Path) -> dict:
    try:
        loaded = scipy.io.loadmat(path)
    except NotImplementedError as exc:
        raise DataError(
            f"{path}: MATLAB 7.3 containers are HDF5 files and are not "
            "supported; re-save the archive as v5"
        ) from exc
    except Exception as exc:
        raise DataError(f"{path}: not a readable MAT container ({exc})") from exc
    return {k: v for k, v in loaded.items() if not k.startswith("__")}


def load_variable(path, name: str) -> np.ndarray:
    """Pull one named array out of a .mat, .npz, or .npy container."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such source file")
    suffix = path.suffix.lower()
    if suffix == ".mat":
        table = _mat_variables(path)
    elif suffix == ".npz":
        try:
            archive = np.load(path)
        except Exception as exc:
            raise DataError(f"{path}: not a readable npz container ({exc})") from exc
        table = {k: archive[k] for k in archive.files}
    elif suffix == ".npy":
        try:
            arr = np.load(path)
        except Exception as exc:
            raise DataError(f"{path}: not a readable npy file ({exc})") from exc
        table = {path.stem: arr}
        if not name:
            name = path.stem
    else:
        raise ConfigError(f"{path}: unsupported container suffix {suffix!r}")
    if not name:
        if len(table) == 1:
            name = next(iter(table))
        else:
            raise ConfigError(
                f"{path} holds {sorted(table)}; name the variable explicitly"
            )
    if name not in table:
        raise DataError(
            f"variable {name!r} not found in {path}; it holds {sorted(table)}"
        )
    return np.asarray(table[name])


# -- axis normalization ---------------------------------------------------------------

def normalize_axes(arr: np.ndarray, axes: str, time_series: bool) -> np.ndarray:
    """Permute a stored array into (n, c, h, w), or (n, t, h, w) for
    trajectories, inserting length-1 axes that the source does not carry."""
    axes = axes.lower()
    allowed = "nthw" if time_series else "nchw"
    if len(set(axes)) != len(axes):
        raise ConfigError(f"axis order {axes!r} repeats an axis")
    bad = set(axes) - set(allowed)
    if bad:
        raise ConfigError(
            f"axis order {axes!r} uses {''.join(sorted(bad))!r}; "
            f"only {allowed!r} applies here"
        )
    for required in "nhw" + ("t" if time_series else ""):
        if required not in axes:
            raise ConfigError(f"axis order {axes!r} is missing {required!r}")
    if arr.ndim != len(axes):
        raise DataError(
            f"array of shape {arr.shape} has {arr.ndim} axes, "
            f"axis order {axes!r} names {len(axes)}"
        )
    present = [a for a in allowed if a in axes]
    arr = arr.transpose([axes.index(a) for a in present])
    for pos, axis in enumerate(allowed):
        if axis not in axes:
            arr = np.expand_dims(arr, pos)
    return arr


def subsample_mesh(arr: np.ndarray, stride: int) -> np.ndarray:
    """Keep every stride-th grid line along the two trailing axes, boundary
    rows and columns included."""
    if stride < 1:
        raise ConfigError(f"stride must be positive, got {stride}")
    if stride == 1:
        return arr
    return arr[..., ::stride, ::stride]


# -- conversion ---------------------------------------------------------------------

def _gather_role(pairs, axes: str, stride: int, time_series: bool) -> np.ndarray:
    parts = []
    for path, var in pairs:
        arr = load_variable(path, var)
        arr = normalize_axes(arr, axes, time_series)
        parts.append(subsample_mesh(arr, stride))
    if len(parts) == 1:
        stacked = parts[0]
    else:
        base = parts[0].shape
        for part in parts[1:]:
            if part.shape[0] != base[0] or part.shape[2:] != base[2:]:
                raise DataError(
                    f"cannot stack variables of shapes {base} and {part.shape} "
                    "along channels"
                )
        stacked = np.concatenate(parts, axis=1)
    return np.ascontiguousarray(stacked.astype(np.float32))


def _require_shape(role: str, arr: np.ndarray, expected: tuple) -> None:
    if arr.shape[1:] != expected:
        raise DataError(
            f"{role} tensor has shape {arr.shape}, expected "
            f"(samples,) + {expected} for this benchmark"
        )


def _checksum_lines(directory: Path, names) -> str:
    lines = []
    for name in sorted(names):
        digest = hashlib.sha256((directory / name).read_bytes()).hexdigest()
        lines.append(f"{digest}  {name}")
    return "\n".join(lines) + "\n"


def convert(spec: SourceSpec) -> dict:
    """Run one conversion. Returns the written paths and tensor shapes."""
    contract = spec.contract
    axes = spec.effective_axes
    stride = spec.effective_stride
    time_series = contract.frames > 0
    n_train, n_test = spec.split

    if time_series:
        traj = _gather_role(spec.inputs, axes, stride, time_series=True)
        _require_shape("trajectory", traj,
                       (contract.frames,) + contract.mesh)
        tensors = {"trajectories.dsnt": traj}
        inputs_name = targets_name = "trajectories.dsnt"
        n_samples = traj.shape[0]
        shapes = {"trajectories.dsnt": traj.shape}
    else:
        inputs = _gather_role(spec.inputs, axes, stride, time_series=False)
        targets = _gather_role(spec.targets, axes, stride, time_series=False)
        _require_shape("inputs", inputs, (contract.in_channels,) + contract.mesh)
        _require_shape("targets", targets, (contract.out_channels,) + contract.mesh)
        if inputs.shape[0] != targets.shape[0]:
            raise DataError(
                f"inputs hold {inputs.shape[0]} samples but targets hold "
                f"{targets.shape[0]}"
            )
        tensors = {"inputs.dsnt": inputs, "targets.dsnt": targets}
        inputs_name, targets_name = "inputs.dsnt", "targets.dsnt"
        n_samples = inputs.shape[0]
        shapes = {name: arr.shape for name, arr in tensors.items()}

    if n_train + n_test != n_samples:
        raise DataError(
            f"source holds {n_samples} samples but the declared split is "
            f"{n_train} + {n_test}"
        )

    out = spec.out_dir
    out.mkdir(parents=True, exist_ok=True)
    for name, arr in tensors.items():
        write_tensor(out / name, arr)
    write_manifest(
        out / "manifest.txt",
        name=contract.name,
        n_train=n_train,
        n_test=n_test,
        inputs=inputs_name,
        targets=targets_name,
        mesh=contract.mesh,
        channels=(contract.in_channels, contract.out_channels),
        normalize=contract.normalize,
        ns_history=contract.history,
        ns_horizon=contract.horizon,
    )
    written = sorted(tensors) + ["manifest.txt"]
    (out / CHECKSUM_FILE).write_text(_checksum_lines(out, written))
    return {
        "directory": out,
        "manifest": out / "manifest.txt",
        "checksums": out / CHECKSUM_FILE,
        "shapes": shapes,
        "split": (n_train, n_test),
    }
