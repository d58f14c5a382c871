"""Guidance encoder: a compact transformer over map tokens and instruction
embeddings standing in for a large language model, plus the feature adapter
and the five alignment-assistance heads used only during training."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .. import nn
from ..nn.tensor import Tensor
from ..planner.config import PlannerConfig
from ..planner.model import DecoderBlock
from ..planner.types import InstructionFeature
from .tokens import VOCAB_SIZE

D_GUIDANCE = 256
MAX_TOKEN_POSITIONS = 2 + 2 * 8  # BOS/EOS plus SEP-joined instructions

DECISION_CLASSES = ("accelerate", "decelerate", "maintain")
LIGHT_CLASSES = ("green", "yellow", "red", "unknown")


@dataclass(frozen=True)
class GuidanceConfig:
    d_guidance: int = D_GUIDANCE
    n_heads: int = 4
    n_blocks: int = 2
    ffn_mult: int = 2
    d_model: int = 128          # planner token width feeding the map adapter

    def block_config(self) -> PlannerConfig:
        return PlannerConfig(d_model=self.d_guidance, n_heads=self.n_heads,
                             ffn_mult=self.ffn_mult)

    def to_dict(self) -> dict:
        return {"d_guidance": self.d_guidance, "n_heads": self.n_heads,
                "n_blocks": self.n_blocks, "ffn_mult": self.ffn_mult,
                "d_model": self.d_model}

    @classmethod
    def from_dict(cls, raw: dict) -> "GuidanceConfig":
        return cls(**{k: int(v) for k, v in raw.items()})


@dataclass
class GuidanceHidden:
    hidden: Tensor       # (B, N_map + L, D_g)
    h_last: Tensor       # (B, D_g), the last valid instruction position


@dataclass(frozen=True)
class AlignmentTargets:
    """Ground truth for the five auxiliary alignment heads."""

    x_va: np.ndarray     # (4,) ego vx, vy, ax, ay
    x_dec: int           # index into DECISION_CLASSES
    x_traf: int          # index into LIGHT_CLASSES
    x_adj: np.ndarray    # (2,) left/right neighbor exists
    x_chg: float         # future lane change

    def __post_init__(self):
        va = np.asarray(self.x_va, dtype=np.float64).reshape(4)
        if not np.all(np.isfinite(va)):
            raise ValueError("x_va must be finite")
        object.__setattr__(self, "x_va", va)
        if not 0 <= self.x_dec < len(DECISION_CLASSES):
            raise ValueError(f"x_dec out of range: {self.x_dec}")
        if not 0 <= self.x_traf < len(LIGHT_CLASSES):
            raise ValueError(f"x_traf out of range: {self.x_traf}")
        adj = np.asarray(self.x_adj, dtype=np.float64).reshape(2)
        object.__setattr__(self, "x_adj", adj)
        if self.x_chg not in (0.0, 1.0):
            raise ValueError(f"x_chg must be 0 or 1, got {self.x_chg}")


class GuidanceNet(nn.Module):
    """Map tokens (adapted from the scene encoder) prepended to instruction
    embeddings, run through full-attention transformer blocks."""

    def __init__(self, config: GuidanceConfig = GuidanceConfig(), seed: int = 0):
        rng = np.random.default_rng((seed, 0x6D1))
        d = config.d_guidance
        self.config = config
        self.map_adapter = nn.MLP(config.d_model, d, d, rng)
        self.tok_emb = nn.Embedding(VOCAB_SIZE, d, rng)
        self.tok_emb.weight.data *= 15.0  # std 0.3: comparable to map tokens
        self.pos_emb = nn.Parameter(rng.normal(0.0, 0.3, size=(MAX_TOKEN_POSITIONS, d)))
        # input norms keep both branches at the same per-token scale, so the
        # few instruction tokens are not drowned out by the map tokens
        self.map_norm = nn.LayerNorm(d)
        self.instr_norm = nn.LayerNorm(d)
        self.blocks = [DecoderBlock(config.block_config(), rng, injected=False)
                       for _ in range(config.n_blocks)]

    def __call__(self, map_tokens: Tensor, map_mask: np.ndarray,
                 token_ids: np.ndarray, token_mask: np.ndarray) -> GuidanceHidden:
        b, seq_len = token_ids.shape
        instr = self.instr_norm(self.tok_emb(token_ids) + self.pos_emb[:seq_len])
        hidden = nn.concat([self.map_norm(self.map_adapter(map_tokens)), instr], axis=1)
        mask = np.concatenate([map_mask, token_mask], axis=1)
        for block in self.blocks:
            hidden = block(hidden, mask, None)
        n_map = map_tokens.shape[1]
        last_idx = token_mask.shape[1] - 1 - token_mask[:, ::-1].argmax(axis=1)
        h_last = hidden[np.arange(b), n_map + last_idx]
        return GuidanceHidden(hidden=hidden, h_last=h_last)


class FeatureAdapter(nn.Module):
    """Single affine map from the guidance width to the planner width."""

    def __init__(self, config: GuidanceConfig = GuidanceConfig(), seed: int = 0):
        rng = np.random.default_rng((seed, 0xADA))
        self.linear = nn.Linear(config.d_guidance, config.d_model, rng)

    def __call__(self, h_last: Tensor) -> Tensor:
        return self.linear(h_last)

    def to_feature(self, h_last: Tensor, source: str = "learned") -> InstructionFeature:
        vec = self.linear(h_last).data.reshape(-1)
        return InstructionFeature(vector=vec, age=0, source=source)


class AlignmentHeads(nn.Module):
    """Five independent 2-layer MLP prediction heads over h_last."""

    def __init__(self, config: GuidanceConfig = GuidanceConfig(), seed: int = 0):
        rng = np.random.default_rng((seed, 0xA11))
        d = config.d_guidance
        self.va = nn.MLP(d, d, 4, rng)
        self.dec = nn.MLP(d, d, len(DECISION_CLASSES), rng)
        self.traf = nn.MLP(d, d, len(LIGHT_CLASSES), rng)
        self.adj = nn.MLP(d, d, 2, rng)
        self.chg = nn.MLP(d, d, 1, rng)

    def __call__(self, h_last: Tensor) -> dict[str, Tensor]:
        return {
            "va": self.va(h_last),
            "dec": self.dec(h_last),
            "traf": self.traf(h_last),
            "adj": self.adj(h_last),
            "chg": self.chg(h_last),
        }


def alignment_loss(preds: dict[str, Tensor],
                   targets: Sequence[AlignmentTargets]) -> tuple[Tensor, dict]:
    """Unweighted sum of the five alignment terms."""
    va_gt = np.stack([t.x_va for t in targets])
    dec_gt = np.array([t.x_dec for t in targets])
    traf_gt = np.array([t.x_traf for t in targets])
    adj_gt = np.stack([t.x_adj for t in targets])
    chg_gt = np.array([[t.x_chg] for t in targets])

    terms = {
        "va_l1": nn.l1(preds["va"], va_gt),
        "dec_ce": nn.cross_entropy(preds["dec"], dec_gt),
        "traf_ce": nn.cross_entropy(preds["traf"], traf_gt),
        "adj_bce": nn.binary_cross_entropy(preds["adj"], adj_gt),
        "chg_bce": nn.binary_cross_entropy(preds["chg"], chg_gt),
    }
    total = terms["va_l1"] + terms["dec_ce"] + terms["traf_ce"] + terms["adj_bce"] + terms["chg_bce"]
    parts = {k: float(v.data) for k, v in terms.items()}
    parts["align"] = float(total.data)
    return total, parts


def total_loss(align: Tensor, plan: Tensor) -> Tensor:
    """Fine-tuning objective: alignment plus planning, unweighted."""
    return align + plan
