"""Command-line interface: train, ablate, export, inspect.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numeric
divergence.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import dataio, figures
from .errors import ConfigError, DsenoError
from .model import build_model, parameter_count, receptive_field
from .spectral import build_fno, fno_parameter_count
from .tables import (
    FAMILIES,
    list_fno_rows,
    list_table_rows,
    normalize_name,
    parse_fno_row,
    reconstruct_fno_config,
    reconstruct_table_config,
)
from .training import TrainConfig, load_checkpoint, rollout_eval, train


# -- run configuration echo ------------------------------------------------------

def format_run_config(pairs: dict) -> str:
    return "\n".join(f"{k} = {v}" for k, v in pairs.items()) + "\n"


def echo_run_config(pairs: dict, out_dir: Path | None, quiet: bool) -> None:
    text = format_run_config(pairs)
    if not quiet:
        sys.stdout.write(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "config.txt").write_text(text)


# -- model construction by row name ---------------------------------------------------

def is_fno_row(name: str) -> bool:
    return normalize_name(name).startswith("fno-")


def build_named_model(name: str, seed: int, dtype: str = "float32",
                      width: int | None = None):
    """(model, config, info) for a registry row, spectral baselines included."""
    if is_fno_row(name):
        benchmark, modes = parse_fno_row(name)
        cfg = reconstruct_fno_config(benchmark, modes)
        if width is not None or dtype != cfg.dtype:
            from dataclasses import replace
            cfg = replace(cfg, width=width or cfg.width, dtype=dtype)
        model = build_fno(cfg, seed=seed)
        info = {
            "kind": "spectral-baseline",
            "family": benchmark,
            "width": cfg.width,
            "blocks": cfg.n_layers,
            "params": fno_parameter_count(cfg),
        }
        return model, cfg, info
    cfg = reconstruct_table_config(name, width=width)
    if dtype != cfg.dtype:
        from dataclasses import replace
        cfg = replace(cfg, dtype=dtype)
    model = build_model(cfg, seed=seed)
    rf = receptive_field(cfg)
    info = {
        "kind": "dilated",
        "family": normalize_name(name).split("-")[0],
        "width": cfg.width,
        "blocks": len(cfg.blocks),
        "params": parameter_count(cfg),
        "receptive_field": rf,
    }
    return model, cfg, info


# -- dataset resolution ----------------------------------------------------------------

_SYNTH_DARCY_DEFAULTS = {"n_train": 64, "n_test": 16, "size": 64}
_SYNTH_NS_DEFAULTS = {"n_train": 20, "n_test": 4, "size": 32}


def resolve_dataset(spec: str, run_dir: Path | None, args) -> Path:
    """A manifest path, or synthetic:darcy / synthetic:ns generated on the fly."""
    if not spec:
        raise ConfigError(
            "--dataset is required: a manifest path, synthetic:darcy, or synthetic:ns"
        )
    if spec.startswith("synthetic:"):
        kind = spec.split(":", 1)[1]
        base = (run_dir or Path(".")) / "data"
        seed = getattr(args, "data_seed", None)
        seed = args.seed if seed is None else seed
        if kind == "darcy":
            d = _SYNTH_DARCY_DEFAULTS
            return dataio.make_synthetic_darcy(
                base,
                n_train=args.n_train or d["n_train"],
                n_test=args.n_test or d["n_test"],
                size=args.size or d["size"],
                seed=seed,
            )
        if kind == "ns":
            d = _SYNTH_NS_DEFAULTS
            return dataio.make_synthetic_ns(
                base,
                n_train=args.n_train or d["n_train"],
                n_test=args.n_test or d["n_test"],
                size=args.size or d["size"],
                seed=seed,
            )
        raise ConfigError(f"unknown synthetic dataset {kind!r}; use darcy or ns")
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"dataset manifest {spec!r} does not exist")
    return path


def shrink_bundle(bundle, n_train: int | None, n_test: int | None):
    if n_train is not None:
        bundle.train_x_enc = bundle.train_x_enc[:n_train]
        bundle.train_x_phys = bundle.train_x_phys[:n_train]
        bundle.train_y_phys = bundle.train_y_phys[:n_train]
    if n_test is not None:
        bundle.test_x_enc = bundle.test_x_enc[:n_test]
        bundle.test_x_phys = bundle.test_x_phys[:n_test]
        bundle.test_y_phys = bundle.test_y_phys[:n_test]
    return bundle


def check_channels(model_in: int, model_out: int, bundle) -> None:
    data_in = bundle.train_x_enc.shape[1]
    data_out = bundle.train_y_phys.shape[1]
    if data_in != model_in or data_out != model_out:
        raise ConfigError(
            f"model expects {model_in} input / {model_out} output channels, "
            f"dataset provides {data_in} / {data_out}")


# -- train ------------------------------------------------------------------------------

def cmd_train(args) -> int:
    out_dir = Path(args.out)
    manifest_path = resolve_dataset(args.dataset, out_dir, args)
    bundle = dataio.load_dataset(manifest_path, dtype=args.dtype)
    if not args.dataset.startswith("synthetic:"):
        bundle = shrink_bundle(bundle, args.n_train, args.n_test)

    model, _, info = build_named_model(args.model, seed=args.seed,
                                       dtype=args.dtype, width=args.width)
    check_channels(model.cfg.in_channels, model.cfg.out_channels, bundle)

    cfg = TrainConfig(
        n_train=bundle.train_x_enc.shape[0],
        n_test=bundle.test_y_phys.shape[0],
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr0=args.lr,
        step_size=args.step_size,
        decay=args.decay,
        weight_decay=args.weight_decay,
        seed=args.seed,
        dtype=args.dtype,
        rollout_horizon=bundle.manifest.ns_horizon,
        checkpoint_every=args.checkpoint_every,
    )
    echo_run_config(
        {
            "command": "train",
            "model": normalize_name(args.model),
            "dataset": args.dataset,
            "manifest": manifest_path,
            "parameters": info["params"],
            "n_train": cfg.n_train,
            "n_test": cfg.n_test,
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "lr0": cfg.lr0,
            "step_size": cfg.step_size,
            "decay": cfg.decay,
            "weight_decay": cfg.weight_decay,
            "seed": cfg.seed,
            "dtype": cfg.dtype,
            "rollout_horizon": cfg.rollout_horizon,
        },
        out_dir,
        args.quiet,
    )

    def log(row):
        if not args.quiet:
            print(f"epoch {row['epoch']:4d}  lr {row['lr']:.3e}  "
                  f"train {row['train_rel_l2']:.5f}  test {row['test_rel_l2']:.5f}  "
                  f"({row['wall_seconds']:.1f}s)")

    state = train(model, bundle, cfg, out_dir=out_dir, log=log, resume=args.resume)
    _train_report_figures(out_dir, model, bundle, state)
    if not args.quiet:
        last = state.history[-1]
        print(f"final train {last['train_rel_l2']:.5f}  test {last['test_rel_l2']:.5f}")
    return 0


def _train_report_figures(out_dir: Path, model, bundle, state) -> None:
    if state.history:
        figures.save_training_curves(out_dir / "training_curves.png", state.history)
    if bundle.test_y_phys.shape[0] == 0:
        return
    if bundle.manifest.ns_horizon > 0:
        preds, _ = rollout_eval(model, bundle.test_x_phys[:1], bundle.test_y_phys[:1],
                                bundle.in_mean, bundle.in_std,
                                bundle.out_mean, bundle.out_std)
        truth = bundle.test_y_phys[0, -1]
        pred = preds[0, -1]
        title = f"rollout frame {bundle.test_y_phys.shape[1]}"
    else:
        pred_norm = model.forward(bundle.test_x_enc[:1])
        pred = (pred_norm.astype(np.float64) * bundle.out_std + bundle.out_mean)[0, 0]
        truth = bundle.test_y_phys[0, 0]
        title = "held-out sample 0, channel 0"
    figures.save_prediction_figure(out_dir / "prediction_sample.png", truth, pred,
                                   title=title)


# -- ablate ---------------------------------------------------------------------------------

def _family_rows(family: str) -> list[str]:
    family = normalize_name(family)
    if family.startswith("fno-"):
        bench = family.split("-", 1)[1]
        if bench not in FAMILIES:
            raise ConfigError(f"unknown benchmark {bench!r}; known: {', '.join(FAMILIES)}")
        return [r for r in list_fno_rows() if r.startswith(f"fno-{bench}-")]
    if family not in FAMILIES:
        raise ConfigError(
            f"unknown family {family!r}; known: "
            f"{', '.join(list(FAMILIES) + ['fno-' + f for f in FAMILIES])}")
    return [r for r in list_table_rows() if r.split("-")[0] == family]


def cmd_ablate(args) -> int:
    if args.rows:
        rows = [normalize_name(r) for r in args.rows.split(",")]
    elif args.family:
        rows = _family_rows(args.family)
    else:
        raise ConfigError("ablate needs --family or --rows")
    out_dir = Path(args.out) if args.out else None

    records = []
    for name in rows:
        if is_fno_row(name):
            cfg = reconstruct_fno_config(*parse_fno_row(name))
            records.append({"model": name, "blocks": cfg.n_layers,
                            "params": fno_parameter_count(cfg), "rel_l2": None})
        else:
            cfg = reconstruct_table_config(name)
            records.append({"model": name, "blocks": len(cfg.blocks),
                            "params": parameter_count(cfg), "rel_l2": None})

    if not args.dry_run:
        if not args.dataset:
            raise ConfigError("ablate without --dry-run needs --dataset")
        for rec in records:
            run_dir = (out_dir / rec["model"]) if out_dir else None
            manifest_path = resolve_dataset(args.dataset, run_dir or Path("."), args)
            bundle = dataio.load_dataset(manifest_path, dtype=args.dtype)
            if not args.dataset.startswith("synthetic:"):
                bundle = shrink_bundle(bundle, args.n_train, args.n_test)
            model, _, _ = build_named_model(rec["model"], seed=args.seed, dtype=args.dtype)
            check_channels(model.cfg.in_channels, model.cfg.out_channels, bundle)
            cfg = TrainConfig(
                n_train=bundle.train_x_enc.shape[0],
                n_test=bundle.test_y_phys.shape[0],
                epochs=args.epochs,
                batch_size=args.batch_size,
                lr0=args.lr,
                step_size=args.step_size,
                decay=args.decay,
                weight_decay=args.weight_decay,
                seed=args.seed,
                dtype=args.dtype,
                rollout_horizon=bundle.manifest.ns_horizon,
            )
            state = train(model, bundle, cfg, out_dir=run_dir)
            rec["rel_l2"] = state.history[-1]["test_rel_l2"]

    lines = ["model,blocks,params,rel_l2"]
    for rec in records:
        rel = "" if rec["rel_l2"] is None else f"{rec['rel_l2']:.6f}"
        lines.append(f"{rec['model']},{rec['blocks']},{rec['params']},{rel}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "ablation.csv").write_text(text)
        figures.save_ablation_figure(out_dir / "ablation.png", records,
                                     title=normalize_name(args.family or "selection"))
    return 0


# -- export --------------------------------------------------------------------------------------

def _write_pgm(path: Path, field: np.ndarray) -> None:
    lo, hi = float(field.min()), float(field.max())
    span = hi - lo if hi > lo else 1.0
    scaled = np.round((field - lo) / span * 255.0).astype(np.uint8)
    header = f"P5\n{field.shape[1]} {field.shape[0]}\n255\n".encode("ascii")
    path.write_bytes(header + scaled.tobytes())
    sidecar = path.with_suffix(path.suffix + ".minmax")
    sidecar.write_text(f"min = {lo!r}\nmax = {hi!r}\n")


def cmd_export(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = resolve_dataset(args.dataset, out_dir, args)
    bundle = dataio.load_dataset(manifest_path, dtype=args.dtype)
    model, _, info = build_named_model(args.model, seed=args.seed, dtype=args.dtype,
                                       width=args.width)
    check_channels(model.cfg.in_channels, model.cfg.out_channels, bundle)
    load_checkpoint(args.checkpoint, model)

    split_x = bundle.test_x_enc if args.split == "test" else bundle.train_x_enc
    split_y = bundle.test_y_phys if args.split == "test" else bundle.train_y_phys
    if args.sample >= split_x.shape[0]:
        raise ConfigError(
            f"sample {args.sample} out of range for {args.split} split of {split_x.shape[0]}")

    if bundle.manifest.ns_horizon > 0:
        window = (bundle.test_x_phys if args.split == "test"
                  else bundle.train_x_phys)[args.sample : args.sample + 1]
        x_enc = ((window.astype(np.float64) - bundle.in_mean) / bundle.in_std
                 ).astype(window.dtype)
        pred = model.forward(x_enc)
        truth = split_y[args.sample : args.sample + 1, :1]
    else:
        pred = model.forward(split_x[args.sample : args.sample + 1])
        truth = split_y[args.sample : args.sample + 1]
    pred_phys = pred.astype(np.float64) * bundle.out_std + bundle.out_mean

    written = []
    for c in range(pred_phys.shape[1]):
        field = pred_phys[0, c]
        if args.format == "csv":
            p = out_dir / f"prediction_c{c}.csv"
            np.savetxt(p, field, delimiter=",", fmt="%.9e")
        else:
            p = out_dir / f"prediction_c{c}.pgm"
            _write_pgm(p, field)
        written.append(p)
        figures.save_prediction_figure(
            out_dir / f"prediction_c{c}.png", truth[0, c], field,
            title=f"{normalize_name(args.model)} sample {args.sample} channel {c}")
    echo_run_config(
        {
            "command": "export",
            "model": normalize_name(args.model),
            "checkpoint": args.checkpoint,
            "sample": args.sample,
            "split": args.split,
            "format": args.format,
            "files": ";".join(str(p) for p in written),
        },
        out_dir,
        args.quiet,
    )
    return 0


# -- inspect ------------------------------------------------------------------------------------------

def cmd_inspect(args) -> int:
    if args.list:
        for row in list_table_rows() + list_fno_rows():
            print(row)
        return 0
    if not args.model:
        raise ConfigError("inspect needs --model or --list")
    name = normalize_name(args.model)
    if is_fno_row(name):
        benchmark, modes = parse_fno_row(name)
        cfg = reconstruct_fno_config(benchmark, modes)
        params = fno_parameter_count(cfg)
        print(f"model = {name}")
        print("kind = spectral-baseline")
        print(f"family = {benchmark}")
        print(f"width = {cfg.width}")
        print(f"layers = {cfg.n_layers}")
        print(f"modes = {cfg.modes}x{cfg.modes}")
        print(f"parameters = {params}")
        print(f"parameters_millions = {params / 1e6:.3f}")
        return 0
    cfg = reconstruct_table_config(name, width=args.width)
    params = parameter_count(cfg)
    rf_x, rf_y = receptive_field(cfg)
    print(f"model = {name}")
    print("kind = dilated")
    print(f"family = {name.split('-')[0]}")
    print(f"width = {cfg.width}")
    print(f"blocks = {len(cfg.blocks)}")
    print(f"parameters = {params}")
    print(f"parameters_millions = {params / 1e6:.3f}")
    print(f"receptive_field_x = {rf_x}")
    print(f"receptive_field_y = {rf_y}")
    print("block,dilation_x,dilation_y,k1,bias1,k2,bias2,se,pm")
    for i, b in enumerate(cfg.blocks, 1):
        print(f"{i},{b.dilation[0]},{b.dilation[1]},{b.k1},{b.bias1},"
              f"{b.k2},{b.bias2},{b.se is not None},{b.pm}")
    return 0


# -- parser -----------------------------------------------------------------------------------------------

def _add_common_train_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="manifest path, synthetic:darcy, or synthetic:ns")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--step-size", type=int, default=100)
    p.add_argument("--decay", type=float, default=0.5)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dtype", choices=("float32", "float64"), default="float32")
    p.add_argument("--n-train", type=int, default=None)
    p.add_argument("--n-test", type=int, default=None)
    p.add_argument("--size", type=int, default=None,
                   help="grid size for synthetic datasets")
    p.add_argument("--data-seed", type=int, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dseno",
        description="Dilated-convolution PDE surrogates with channel attention, "
                    "plus a spectral baseline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a named model variant")
    p_train.add_argument("--model", required=True)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--checkpoint-every", type=int, default=0)
    p_train.add_argument("--resume", default=None)
    _add_common_train_options(p_train)

    p_ablate = sub.add_parser("ablate", help="size or train a family of variants")
    p_ablate.add_argument("--family", default=None,
                          help="airfoil | pipe | darcy | ns | fno-<benchmark>")
    p_ablate.add_argument("--rows", default=None, help="comma-separated row names")
    p_ablate.add_argument("--dry-run", action="store_true",
                          help="report sizes only, no training")
    p_ablate.add_argument("--out", default=None)
    _add_common_train_options(p_ablate)

    p_export = sub.add_parser("export", help="write predictions from a checkpoint")
    p_export.add_argument("--model", required=True)
    p_export.add_argument("--checkpoint", required=True)
    p_export.add_argument("--out", required=True)
    p_export.add_argument("--format", choices=("csv", "pgm"), default="csv")
    p_export.add_argument("--sample", type=int, default=0)
    p_export.add_argument("--split", choices=("test", "train"), default="test")
    _add_common_train_options(p_export)

    p_inspect = sub.add_parser("inspect", help="describe a named model variant")
    p_inspect.add_argument("--model", default=None)
    p_inspect.add_argument("--list", action="store_true")
    p_inspect.add_argument("--width", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "train": cmd_train,
        "ablate": cmd_ablate,
        "export": cmd_export,
        "inspect": cmd_inspect,
    }
    try:
        return handlers[args.command](args)
    except DsenoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
