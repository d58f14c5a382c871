from .tokens import (
    BOS,
    EOS,
    MAX_INSTRUCTIONS,
    PAD,
    SEP,
    VOCAB_SIZE,
    distance_bucket,
    instruction_token,
    pad_token_batch,
    tokenize_instructions,
)
from .model import (
    AlignmentHeads,
    AlignmentTargets,
    D_GUIDANCE,
    FeatureAdapter,
    GuidanceConfig,
    GuidanceHidden,
    GuidanceNet,
    alignment_loss,
    total_loss,
)
from .remote import GuidanceProtocolError, RemoteGuidanceClient, scene_summary
from .runtime import LearnedGuidance, MockGuidance

__all__ = [
    "BOS", "EOS", "MAX_INSTRUCTIONS", "PAD", "SEP", "VOCAB_SIZE",
    "distance_bucket", "instruction_token", "pad_token_batch", "tokenize_instructions",
    "AlignmentHeads", "AlignmentTargets", "D_GUIDANCE", "FeatureAdapter",
    "GuidanceConfig", "GuidanceHidden", "GuidanceNet", "alignment_loss", "total_loss",
    "GuidanceProtocolError", "RemoteGuidanceClient", "scene_summary",
    "LearnedGuidance", "MockGuidance",
]
