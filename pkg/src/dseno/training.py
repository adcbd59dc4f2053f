"""Relative-L2 loss, adaptive optimizer with decoupled weight decay, step
learning-rate schedule, the epoch loop with checkpointing and seeding, and
autoregressive rollout evaluation."""
from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .dataio import read_tensor, write_tensor
from .errors import ConfigError, DataError, NumericError
from .tensor import Tensor

BETA1, BETA2, EPSILON = 0.9, 0.999, 1e-8


# -- loss -------------------------------------------------------------------------

def _per_sample_norms(pred: np.ndarray, target: np.ndarray):
    if pred.shape != target.shape:
        raise ConfigError(f"pred shape {pred.shape} != target shape {target.shape}")
    n = pred.shape[0]
    diff = (pred - target).reshape(n, -1)
    tgt = target.reshape(n, -1)
    return np.linalg.norm(diff, axis=1), np.linalg.norm(tgt, axis=1), diff


def relative_l2(pred, target) -> float:
    """Batch mean of ||pred_n - target_n||_2 / ||target_n||_2 (physical units)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    dn, tn, _ = _per_sample_norms(pred, target)
    keep = tn > 0.0
    if not keep.all():
        warnings.warn(f"skipping {int((~keep).sum())} sample(s) with zero-norm target")
    if not keep.any():
        raise ConfigError("every target in the batch has zero norm")
    return float((dn[keep] / tn[keep]).mean())


def relative_l2_with_grad(pred, target):
    """(loss, d loss / d pred); zero-norm targets are skipped as in relative_l2."""
    pred64 = np.asarray(pred, dtype=np.float64)
    target64 = np.asarray(target, dtype=np.float64)
    dn, tn, diff = _per_sample_norms(pred64, target64)
    keep = tn > 0.0
    if not keep.all():
        warnings.warn(f"skipping {int((~keep).sum())} sample(s) with zero-norm target")
    if not keep.any():
        raise ConfigError("every target in the batch has zero norm")
    m = int(keep.sum())
    loss = float((dn[keep] / tn[keep]).mean())
    scale = np.zeros_like(tn)
    nonzero_diff = keep & (dn > 0.0)
    scale[nonzero_diff] = 1.0 / (m * dn[nonzero_diff] * tn[nonzero_diff])
    grad = diff * scale[:, None]
    return loss, grad.reshape(pred64.shape)


# -- optimizer ---------------------------------------------------------------------

class AdamW:
    """Adaptive-moment update with bias correction and decoupled weight decay:
    theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + lambda * theta)."""

    def __init__(self, params, weight_decay: float = 0.0,
                 beta1: float = BETA1, beta2: float = BETA2, eps: float = EPSILON):
        self.params = list(params)
        self.weight_decay = float(weight_decay)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self, lr: float):
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            if g is None:
                continue
            if not np.isfinite(g).all():
                raise NumericError(f"non-finite gradient in parameter group {p.name}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / bc1
            v_hat = v / bc2
            update = m_hat / (np.sqrt(v_hat) + self.eps)
            if self.weight_decay != 0.0:
                update = update + self.weight_decay * p.data
            p.data -= (lr * update).astype(p.data.dtype, copy=False)


# -- schedule and config --------------------------------------------------------------

@dataclass
class TrainConfig:
    n_train: int
    n_test: int
    epochs: int
    batch_size: int
    lr0: float = 1e-3
    step_size: int = 100
    decay: float = 0.5
    weight_decay: float = 1e-4
    seed: int = 0
    dtype: str = "float32"
    rollout_horizon: int = 0
    checkpoint_every: int = 0
    clip_norm: float = 0.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.step_size < 1:
            raise ConfigError("schedule step size must be >= 1")


def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    """lr = lr0 * decay^floor(epoch / step_size)."""
    if epoch < 0:
        raise ConfigError("epoch must be nonnegative")
    return cfg.lr0 * cfg.decay ** (epoch // cfg.step_size)


@dataclass
class TrainState:
    model: object
    optimizer: AdamW
    epoch: int = 0
    rng: np.random.Generator = dc_field(default_factory=np.random.default_rng)
    history: list = dc_field(default_factory=list)

    def metric_rows(self):
        return list(self.history)


# -- checkpointing ----------------------------------------------------------------------

def save_checkpoint(directory, model, optimizer: AdamW, epoch: int, seed: int,
                    rng: np.random.Generator | None = None, extra: dict | None = None):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    params = model.parameters()
    names = [p.name for p in params]
    for i, p in enumerate(params):
        write_tensor(d / f"param_{i:04d}.dsnt", Tensor(p.data))
        write_tensor(d / f"moment_m_{i:04d}.dsnt", Tensor(optimizer.m[i]))
        write_tensor(d / f"moment_v_{i:04d}.dsnt", Tensor(optimizer.v[i]))
    meta = {
        "epoch": epoch,
        "opt_step": optimizer.t,
        "seed": seed,
        "param_names": names,
        "rng_state": rng.bit_generator.state if rng is not None else None,
    }
    if extra:
        meta.update(extra)
    (d / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def load_checkpoint(directory, model, optimizer: AdamW | None = None):
    d = Path(directory)
    if not (d / "meta.json").exists():
        raise DataError(f"no checkpoint at {d}")
    meta = json.loads((d / "meta.json").read_text())
    params = model.parameters()
    if meta["param_names"] != [p.name for p in params]:
        raise ConfigError("checkpoint parameter names do not match the model")
    for i, p in enumerate(params):
        p.data[...] = read_tensor(d / f"param_{i:04d}.dsnt").data
        if optimizer is not None:
            optimizer.m[i][...] = read_tensor(d / f"moment_m_{i:04d}.dsnt").data
            optimizer.v[i][...] = read_tensor(d / f"moment_v_{i:04d}.dsnt").data
    if optimizer is not None:
        optimizer.t = meta["opt_step"]
    return meta


def restore_rng(meta: dict) -> np.random.Generator:
    rng = np.random.default_rng()
    state = meta.get("rng_state")
    if state is None:
        raise ConfigError("checkpoint carries no RNG state")
    rng.bit_generator.state = state
    return rng


# -- evaluation --------------------------------------------------------------------------

def _decode(pred_norm: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return pred_norm * std + mean


def evaluate(model, x_enc: np.ndarray, y_phys: np.ndarray, out_mean, out_std,
             batch_size: int = 32) -> float:
    """Mean relative L2 over a split, computed in physical units."""
    total, count = 0.0, 0
    for s in range(0, x_enc.shape[0], batch_size):
        xb = x_enc[s : s + batch_size]
        pred = _decode(model.forward(xb), out_mean, out_std)
        total += relative_l2(pred, y_phys[s : s + batch_size]) * xb.shape[0]
        count += xb.shape[0]
    return total / max(count, 1)


def rollout_eval(model, history_phys: np.ndarray, target_phys: np.ndarray,
                 in_mean, in_std, out_mean, out_std):
    """Autoregressive rollout: feed each 1-step prediction back into the
    sliding history window. history_phys: (S, history, H, W) physical frames;
    target_phys: (S, horizon, H, W). Returns (predictions, mean relative L2
    of the full predicted trajectory per sample)."""
    horizon = target_phys.shape[1]
    if history_phys.shape[0] != target_phys.shape[0]:
        raise ConfigError("history and target sample counts differ")
    window = history_phys.astype(np.float64)
    preds = np.empty_like(target_phys, dtype=np.float64)
    for t in range(horizon):
        x_enc = ((window - in_mean) / in_std).astype(history_phys.dtype)
        pred_phys = _decode(model.forward(x_enc).astype(np.float64), out_mean, out_std)
        preds[:, t] = pred_phys[:, 0]
        window = np.concatenate([window[:, 1:], pred_phys], axis=1)
    n = preds.shape[0]
    diff = (preds - target_phys).reshape(n, -1)
    tgt = np.asarray(target_phys, dtype=np.float64).reshape(n, -1)
    tn = np.linalg.norm(tgt, axis=1)
    if (tn == 0).any():
        raise ConfigError("rollout target trajectory has zero norm")
    err = float((np.linalg.norm(diff, axis=1) / tn).mean())
    return preds, err


# -- training loop ----------------------------------------------------------------------------

def _clip_gradients(params, max_norm: float):
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float((p.grad.astype(np.float64) ** 2).sum())
    norm = np.sqrt(total)
    if norm > max_norm > 0.0:
        scale = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= scale
    return norm


def train(model, bundle, cfg: TrainConfig, out_dir=None, log=None, resume=None):
    """Seeded epoch loop: shuffle, batch, forward, loss in physical units,
    explicit backward, optimizer step; records per-epoch train loss and
    test relative L2; checkpoints at the configured cadence."""
    rollout = cfg.rollout_horizon > 0
    x_train = bundle.train_x_phys if rollout else bundle.train_x_enc
    y_train = bundle.train_y_phys
    n_train = min(cfg.n_train, x_train.shape[0])
    out_mean, out_std = bundle.out_mean, bundle.out_std

    rng = np.random.default_rng(cfg.seed)
    optimizer = AdamW(model.parameters(), weight_decay=cfg.weight_decay)
    state = TrainState(model=model, optimizer=optimizer, rng=rng)
    start_epoch = 0
    if resume is not None:
        meta = load_checkpoint(resume, model, optimizer)
        start_epoch = int(meta["epoch"])
        if meta.get("rng_state") is not None:
            rng.bit_generator.state = meta["rng_state"]
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        metrics_file = out_path / "metrics.csv"
        if resume is None or not metrics_file.exists():
            metrics_file.write_text("epoch,lr,train_rel_l2,test_rel_l2,wall_seconds\n")

    for epoch in range(start_epoch, cfg.epochs):
        t0 = time.perf_counter()
        lr = lr_schedule(epoch, cfg)
        perm = rng.permutation(n_train)
        epoch_loss, n_batches = 0.0, 0
        for s in range(0, n_train, cfg.batch_size):
            idx = perm[s : s + cfg.batch_size]
            optimizer.zero_grad()
            if rollout:
                loss = _rollout_training_step(
                    model, x_train[idx], y_train[idx], bundle, cfg.rollout_horizon
                )
            else:
                pred_norm = model.forward(x_train[idx])
                pred_phys = _decode(pred_norm.astype(np.float64), out_mean, out_std)
                loss, grad_phys = relative_l2_with_grad(pred_phys, y_train[idx])
                grad_norm_space = (grad_phys * out_std).astype(pred_norm.dtype)
                model.backward(grad_norm_space)
            if not np.isfinite(loss):
                raise NumericError(f"training diverged: non-finite loss at epoch {epoch}")
            if cfg.clip_norm > 0.0:
                _clip_gradients(optimizer.params, cfg.clip_norm)
            optimizer.step(lr)
            epoch_loss += loss
            n_batches += 1

        train_loss = epoch_loss / max(n_batches, 1)
        if rollout:
            _, test_metric = rollout_eval(
                model, bundle.test_x_phys, bundle.test_y_phys,
                bundle.in_mean, bundle.in_std, out_mean, out_std,
            )
        else:
            test_metric = evaluate(
                model, bundle.test_x_enc, bundle.test_y_phys, out_mean, out_std,
                batch_size=max(cfg.batch_size, 1),
            )
        row = {
            "epoch": epoch,
            "lr": lr,
            "train_rel_l2": train_loss,
            "test_rel_l2": test_metric,
            "wall_seconds": time.perf_counter() - t0,
        }
        state.history.append(row)
        state.epoch = epoch + 1
        if log is not None:
            log(row)
        if out_path is not None:
            with metrics_file.open("a") as fh:
                fh.write(
                    f"{row['epoch']},{row['lr']:.10g},{row['train_rel_l2']:.10g},"
                    f"{row['test_rel_l2']:.10g},{row['wall_seconds']:.3f}\n"
                )
            if cfg.checkpoint_every > 0 and (epoch + 1) % cfg.checkpoint_every == 0:
                save_checkpoint(out_path / f"checkpoint_{epoch + 1:05d}", model,
                                optimizer, epoch + 1, cfg.seed, rng=rng)
    if out_path is not None:
        save_checkpoint(out_path / "checkpoint_final", model, optimizer,
                        state.epoch, cfg.seed, rng=rng)
    return state


def _rollout_training_step(model, x_batch, y_batch, bundle, horizon: int) -> float:
    """Step-wise teacher-free rollout: predict one frame, accumulate its loss
    gradient, feed the (detached) prediction back into the window."""
    in_mean, in_std = bundle.in_mean, bundle.in_std
    out_mean, out_std = bundle.out_mean, bundle.out_std
    window = x_batch.astype(np.float64)  # physical history frames
    total = 0.0
    steps = min(horizon, y_batch.shape[1])
    for t in range(steps):
        x_enc = ((window - in_mean) / in_std).astype(x_batch.dtype)
        pred_norm = model.forward(x_enc)
        pred_phys = _decode(pred_norm.astype(np.float64), out_mean, out_std)
        target_t = y_batch[:, t : t + 1]
        loss, grad_phys = relative_l2_with_grad(pred_phys, target_t)
        model.backward(((grad_phys / steps) * out_std).astype(pred_norm.dtype))
        total += loss
        window = np.concatenate([window[:, 1:], pred_phys], axis=1)
    return total / steps
