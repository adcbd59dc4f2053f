"""Shared helpers for the test suite: small reference model configurations,
a module-level finite-difference gradient check, and parameter zeroing."""
import numpy as np


def tiny_ds_config(dtype="float64"):
    """A small but structurally complete model: one SE block and one
    parameter-matched block, multi-channel in/out, asymmetric dilation."""
    from dseno import DSBlockConfig, ModelConfig, SEConfig

    width = 6
    blocks = (
        DSBlockConfig(width=width, dilation=(2, 1), k1=3, bias1=True, k2=3,
                      bias2=False, se=SEConfig(channels=width, reduction=1)),
        DSBlockConfig(width=width, dilation=(1, 2), k1=3, bias1=False, k2=3,
                      bias2=True, se=None, pm=True),
    )
    return ModelConfig(in_channels=3, out_channels=2, width=width, blocks=blocks,
                       proj_hidden=5, dtype=dtype)


def tiny_fno_config(dtype="float64"):
    from dseno import FNOPlusConfig

    return FNOPlusConfig(in_channels=2, out_channels=2, width=4, modes=3,
                         n_layers=2, proj_hidden=5, dtype=dtype)


def module_grad_check(module, x_data, rng, tolerance=1e-5, step=1e-5):
    """Finite-difference check of a module's input gradient and every
    parameter gradient, against a fixed random cotangent."""
    from dseno import Tensor, grad_check

    x = Tensor(np.asarray(x_data, dtype=np.float64))
    cot = rng.standard_normal(module.forward(x.data).shape)
    tensors = {"input": x}
    tensors.update(dict(module.named_parameters()))

    def loss_fn(compute_grads):
        out = module.forward(x.data)
        value = float((out * cot).sum())
        if compute_grads:
            module.zero_grad()
            x.grad = module.backward(cot)
        return value

    return grad_check(loss_fn, tensors, tolerance=tolerance, step=step)


def zero_parameters(module):
    for _, p in module.named_parameters():
        p.data[...] = 0.0
