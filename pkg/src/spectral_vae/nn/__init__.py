"""Minimal numpy neural-network engine with hand-written backward passes."""

from .checkpoint import load_tensors, save_tensors
from .functional import (
    conv2d_forward,
    conv2d_input_grad,
    conv2d_transposed_forward,
    conv2d_weight_grad,
    dense_forward,
    dropout_mask,
    global_avg_pool,
    relu,
    softmax,
    softmax_xent,
)
from .layers import (
    Conv2d,
    ConvTranspose2d,
    Dense,
    Dropout,
    GlobalAvgPool,
    Layer,
    LayerParams,
    ReLU,
    Reshape,
    Sequential,
)
from .optim import Adam, adam_step
from .rng import make_rng

__all__ = [
    "Adam", "Conv2d", "ConvTranspose2d", "Dense", "Dropout", "GlobalAvgPool",
    "Layer", "LayerParams", "ReLU", "Reshape", "Sequential", "adam_step",
    "conv2d_forward", "conv2d_input_grad", "conv2d_transposed_forward",
    "conv2d_weight_grad", "dense_forward", "dropout_mask", "global_avg_pool",
    "load_tensors", "make_rng", "relu", "save_tensors", "softmax", "softmax_xent",
]
