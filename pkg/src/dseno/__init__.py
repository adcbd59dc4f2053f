"""Dilated-convolution PDE surrogates with channel attention, a spectral
baseline, and the training / data / reporting machinery around them."""

from .blocks import DSBlock, DSBlockConfig, SEBlock, SEConfig, ds_block_forward, se_forward
from .dataio import (
    DatasetBundle,
    DatasetManifest,
    FieldSample,
    Normalizer,
    append_coord_channels,
    darcy_subsample,
    load_dataset,
    make_synthetic_darcy,
    make_synthetic_ns,
    ns_windows,
    read_tensor,
    write_tensor,
)
from .errors import ConfigError, DataError, DsenoError, NumericError
from .functional import (
    ConvKernel,
    conv2d_dilated_backward,
    conv2d_dilated_forward,
    gelu,
    global_avg_pool,
    pointwise_conv,
    resolution_preserving_padding,
    sigmoid,
)
from .gradcheck import GradCheckReport, grad_check
from .model import (
    DSENO,
    ModelConfig,
    build_model,
    dseno_forward,
    parameter_count,
    receptive_field,
)
from .modules import DilatedConv2d, GlobalAvgPool, Module, PointwiseConv2d
from .spectral import (
    FNOPlus,
    FNOPlusConfig,
    SpectralWeights,
    build_fno,
    fno_parameter_count,
    fno_plus_forward,
    irfft2,
    rfft2,
    spectral_conv,
)
from .tables import (
    FAMILIES,
    list_fno_rows,
    list_table_rows,
    normalize_name,
    reconstruct_fno_config,
    reconstruct_table_config,
)
from .tensor import Parameter, Tensor
from .training import (
    AdamW,
    TrainConfig,
    TrainState,
    evaluate,
    load_checkpoint,
    lr_schedule,
    relative_l2,
    relative_l2_with_grad,
    rollout_eval,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AdamW",
    "ConfigError",
    "ConvKernel",
    "DSBlock",
    "DSBlockConfig",
    "DSENO",
    "DataError",
    "DatasetBundle",
    "DatasetManifest",
    "DilatedConv2d",
    "DsenoError",
    "FAMILIES",
    "FNOPlus",
    "FNOPlusConfig",
    "FieldSample",
    "GlobalAvgPool",
    "GradCheckReport",
    "ModelConfig",
    "Module",
    "Normalizer",
    "NumericError",
    "Parameter",
    "PointwiseConv2d",
    "SEBlock",
    "SEConfig",
    "SpectralWeights",
    "Tensor",
    "TrainConfig",
    "TrainState",
    "append_coord_channels",
    "build_fno",
    "build_model",
    "conv2d_dilated_backward",
    "conv2d_dilated_forward",
    "darcy_subsample",
    "ds_block_forward",
    "dseno_forward",
    "evaluate",
    "fno_parameter_count",
    "fno_plus_forward",
    "gelu",
    "global_avg_pool",
    "grad_check",
    "irfft2",
    "list_fno_rows",
    "list_table_rows",
    "load_checkpoint",
    "load_dataset",
    "lr_schedule",
    "make_synthetic_darcy",
    "make_synthetic_ns",
    "normalize_name",
    "ns_windows",
    "parameter_count",
    "pointwise_conv",
    "read_tensor",
    "receptive_field",
    "reconstruct_fno_config",
    "reconstruct_table_config",
    "relative_l2",
    "relative_l2_with_grad",
    "resolution_preserving_padding",
    "rfft2",
    "rollout_eval",
    "save_checkpoint",
    "se_forward",
    "sigmoid",
    "spectral_conv",
    "train",
    "write_tensor",
]
