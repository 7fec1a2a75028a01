from .net import (
    ACTIVATIONS,
    DenseNet,
    GruCell,
    dense,
    dsilu,
    dsoftplus,
    forward_backward,
    gru,
    gru_backward,
    gru_forward,
    gru_params,
    net_backward,
    net_forward,
    net_params,
    silu,
    softplus,
)
from .adam import AdamState, adam_init, adam_step, clip_grad_norm
from .prob import (
    bernoulli_kl,
    gaussian_kl,
    gaussian_kl_elementwise,
    gaussian_logpdf,
    gumbel_softmax,
    sample_gumbel,
    softmax,
)
from .cem import CemConfig, cem_optimize
from .checkpoint import CheckpointError, load_tensors, save_tensors

__all__ = [
    "ACTIVATIONS", "DenseNet", "GruCell", "dense", "dsilu", "dsoftplus",
    "forward_backward", "gru", "gru_backward", "gru_forward", "gru_params",
    "net_backward", "net_forward", "net_params", "silu", "softplus",
    "AdamState", "adam_init", "adam_step", "clip_grad_norm",
    "bernoulli_kl", "gaussian_kl", "gaussian_kl_elementwise", "gaussian_logpdf",
    "gumbel_softmax", "sample_gumbel", "softmax",
    "CemConfig", "cem_optimize",
    "CheckpointError", "load_tensors", "save_tensors",
]
