from .layers import (
    DegenerateMaskError,
    adapter_forward,
    adapter_param_count,
    positional_encoding,
    scaled_dot_attention,
)
from .model import AttentionMap, TransformerConfig, TransformerModel, forward_classify, multi_head_attention
from .train import NumericError, TrainResult, predict_logits, train
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "AttentionMap",
    "DegenerateMaskError",
    "NumericError",
    "TrainResult",
    "TransformerConfig",
    "TransformerModel",
    "adapter_forward",
    "adapter_param_count",
    "forward_classify",
    "load_checkpoint",
    "multi_head_attention",
    "positional_encoding",
    "predict_logits",
    "save_checkpoint",
    "scaled_dot_attention",
    "train",
]
