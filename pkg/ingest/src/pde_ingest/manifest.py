"""Writer for the plain-text dataset manifest.

One `key = value` line per field, in a fixed order, matching the layout the
consuming package reads: mesh as HxW, channels as in,out, booleans as
true/false. This writer is part of the on-disk contract, so it emits every
key explicitly rather than relying on reader defaults.
"""
from pathlib import Path


def write_manifest(path, *, name: str, n_train: int, n_test: int,
                   inputs: str, targets: str, mesh: tuple[int, int],
                   channels: tuple[int, int], normalize: str,
                   append_coords: bool = False,
                   ns_history: int = 0, ns_horizon: int = 0) -> None:
    lines = [
        f"name = {name}",
        f"n_train = {n_train}",
        f"n_test = {n_test}",
        f"inputs = {inputs}",
        f"targets = {targets}",
        f"mesh = {mesh[0]}x{mesh[1]}",
        f"channels = {channels[0]},{channels[1]}",
        f"normalize = {normalize}",
        f"append_coords = {'true' if append_coords else 'false'}",
        f"ns_history = {ns_history}",
        f"ns_horizon = {ns_horizon}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")
