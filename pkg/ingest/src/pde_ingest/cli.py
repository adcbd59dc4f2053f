"""Command-line front end: one conversion per invocation.

Exit codes: 0 success, 1 configuration or usage error, 2 source data error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .convert import convert
from .errors import ConfigError, DataError, IngestError
from .sources import BENCHMARKS, SourceSpec


def _parse_pair(text: str):
    """Split 'path:variable' into its parts; a bare path means the variable
    is resolved from the container (single-variable containers only)."""
    path, colon, var = text.rpartition(":")
    if not colon or ("/" in var or "\\" in var):
        return Path(text), ""
    return Path(path), var


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pde-ingest",
        description=(
            "Convert MAT or NumPy benchmark archives into binary tensor "
            "files plus a manifest and SHA-256 checksums."
        ),
    )
    parser.add_argument("--benchmark", required=True,
                        help=f"one of {', '.join(sorted(BENCHMARKS))}")
    parser.add_argument("--input", action="append", default=[],
                        metavar="FILE[:VAR]",
                        help="source container and variable for the input "
                             "field; repeat to stack channels")
    parser.add_argument("--target", action="append", default=[],
                        metavar="FILE[:VAR]",
                        help="source container and variable for the target "
                             "field; trajectories need none")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--axes", default="",
                        help="axis order of the stored arrays, e.g. nhw or "
                             "nhwt (default: per benchmark)")
    parser.add_argument("--stride", type=int, default=0,
                        help="mesh subsampling stride (default: per benchmark)")
    parser.add_argument("--n-train", type=int, default=0)
    parser.add_argument("--n-test", type=int, default=-1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = SourceSpec(
            benchmark=args.benchmark,
            inputs=[_parse_pair(p) for p in args.input],
            targets=[_parse_pair(p) for p in args.target],
            out_dir=Path(args.out),
            axes=args.axes,
            stride=args.stride,
            n_train=args.n_train,
            n_test=args.n_test,
        )
        report = convert(spec)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name, shape in sorted(report["shapes"].items()):
        print(f"wrote {name}  shape {tuple(shape)}")
    n_train, n_test = report["split"]
    print(f"wrote manifest.txt  split {n_train}/{n_test}")
    print("wrote checksums.sha256")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
