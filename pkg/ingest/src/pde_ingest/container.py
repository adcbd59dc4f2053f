"""Writer for the dseno binary tensor container.

This is an independent implementation of the on-disk contract, which is the
only coupling between the converters and the consuming package: little-endian
throughout, magic b"DSNT", version u16 (currently 1), dtype code u8
(0 = float32, 1 = float64), rank u8 (at most 8), then one u64 extent per
dimension, then the row-major payload.
"""
from pathlib import Path
import struct

import numpy as np

from .errors import DataError

MAGIC = b"DSNT"
FORMAT_VERSION = 1
_DTYPE_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1}
_MAX_RANK = 8


def tensor_bytes(array) -> bytes:
    arr = np.asarray(array)  # tobytes() below emits row-major bytes
    code = _DTYPE_CODES.get(arr.dtype)
    if code is None:
        raise DataError(f"unsupported dtype {arr.dtype} for tensor file")
    if arr.ndim > _MAX_RANK:
        raise DataError(f"rank {arr.ndim} exceeds the maximum of {_MAX_RANK}")
    header = MAGIC + struct.pack("<HBB", FORMAT_VERSION, code, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
    return header + payload


def write_tensor(path, array) -> None:
    Path(path).write_bytes(tensor_bytes(array))
