"""Finite-difference gradient checking for hand-written backward rules.

The op under test is wrapped as a loss callable: `loss_fn(compute_grads)`
returns a scalar loss; when `compute_grads` is True it must also populate
`.grad` on every tensor in `tensors`. Central differences (step 1e-5) are
swept over every element of every tensor and compared to the analytic
gradients. Relative error uses a unit floor so near-zero gradients are
compared absolutely: |a - n| / max(1, |a|, |n|).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import ConfigError, NumericError
from .tensor import Tensor


@dataclass
class GradCheckReport:
    tolerance: float
    max_rel_error: float = 0.0
    worst_tensor: str = ""
    worst_index: tuple = ()
    per_tensor: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"grad_check {status}: max rel error {self.max_rel_error:.3e} "
            f"(tolerance {self.tolerance:.1e}) at {self.worst_tensor}{list(self.worst_index)}"
        )


def grad_check(
    loss_fn: Callable[[bool], float],
    tensors: Mapping[str, Tensor],
    tolerance: float = 1e-6,
    step: float = 1e-5,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences."""
    for name, t in tensors.items():
        if t.data.dtype != np.float64:
            raise ConfigError(f"grad_check requires float64 tensors; {name} is {t.dtype}")

    base = float(loss_fn(True))
    if not np.isfinite(base):
        raise NumericError("loss is non-finite at the evaluation point")
    analytic = {}
    for name, t in tensors.items():
        if t.grad is None:
            raise ConfigError(f"missing backward rule: no gradient populated for {name}")
        if not np.isfinite(t.grad).all():
            raise NumericError(f"non-finite analytic gradient for {name}")
        analytic[name] = t.grad.copy()

    report = GradCheckReport(tolerance=tolerance)
    for name, t in tensors.items():
        flat = t.data.reshape(-1)
        ana = analytic[name].reshape(-1)
        worst = 0.0
        for idx in range(flat.size):
            saved = flat[idx]
            flat[idx] = saved + step
            plus = float(loss_fn(False))
            flat[idx] = saved - step
            minus = float(loss_fn(False))
            flat[idx] = saved
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise NumericError(f"non-finite loss while perturbing {name}[{idx}]")
            numeric = (plus - minus) / (2.0 * step)
            denom = max(1.0, abs(ana[idx]), abs(numeric))
            rel = abs(ana[idx] - numeric) / denom
            if rel > worst:
                worst = rel
            if rel > report.max_rel_error:
                report.max_rel_error = rel
                report.worst_tensor = name
                report.worst_index = np.unravel_index(idx, t.data.shape)
        report.per_tensor[name] = worst
    return report
