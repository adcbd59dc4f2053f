"""Converters from published PDE benchmark archives into the binary tensor
plus manifest layout that the surrogate-modeling package trains from."""
from .container import tensor_bytes, write_tensor
from .convert import CHECKSUM_FILE, convert, load_variable, normalize_axes, subsample_mesh
from .errors import ConfigError, DataError, IngestError
from .manifest import write_manifest
from .sources import BENCHMARKS, BenchmarkContract, SourceSpec

__all__ = [
    "BENCHMARKS",
    "BenchmarkContract",
    "CHECKSUM_FILE",
    "ConfigError",
    "DataError",
    "IngestError",
    "SourceSpec",
    "convert",
    "load_variable",
    "normalize_axes",
    "subsample_mesh",
    "tensor_bytes",
    "write_manifest",
    "write_tensor",
]
