from .tensor import Tensor, concat, embedding, log_softmax, softmax, stack
from .modules import (
    MLP,
    Embedding,
    LayerNorm,
    Linear,
    Module,
    MultiHeadAttention,
    Parameter,
    attention,
)
from .losses import binary_cross_entropy, cross_entropy, gaussian_nll, l1
from .optim import AdamW
from .gradcheck import grad_check
from .checkpoint import (
    CheckpointError,
    assign_parameters,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "Tensor", "concat", "embedding", "log_softmax", "softmax", "stack",
    "MLP", "Embedding", "LayerNorm", "Linear", "Module", "MultiHeadAttention",
    "Parameter", "attention",
    "binary_cross_entropy", "cross_entropy", "gaussian_nll", "l1",
    "AdamW", "grad_check",
    "CheckpointError", "assign_parameters", "load_checkpoint", "save_checkpoint",
]
