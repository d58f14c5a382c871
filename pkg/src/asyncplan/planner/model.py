"""The real-time planner network.

Scene tokens (ego + agents + lane polylines) run through a stack of decoder
blocks whose attention sublayer carries an optional zero-gated cross-attention
branch over a single adapted instruction feature. Learned mode queries
cross-attend to the processed tokens; heads emit per-agent Gaussian-mixture
futures, mode logits, and the ego trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .. import nn
from ..nn.losses import LOG_SIGMA_CLAMP, gaussian_nll_elements
from ..nn.tensor import Tensor
from ..scene.types import VectorScene
from .config import PlannerConfig
from .features import agent_feature_dim, ego_feature_dim, featurize_scenes, LANE_POINT_F


class SceneEncoder(nn.Module):
    """Per-entity encoders producing one token per agent and lane polyline."""

    def __init__(self, config: PlannerConfig, rng: np.random.Generator):
        d = config.d_model
        self.config = config
        self.ego_mlp = nn.MLP(ego_feature_dim(config), config.head_hidden, d, rng)
        self.agent_mlp = nn.MLP(agent_feature_dim(config), config.head_hidden, d, rng)
        self.lane_point_mlp = nn.MLP(LANE_POINT_F, 64, d, rng)
        self.type_emb = nn.Parameter(rng.normal(0.0, 0.02, size=(3, d)))
        self.ego_norm = nn.LayerNorm(d)
        self.agent_norm = nn.LayerNorm(d)
        self.lane_norm = nn.LayerNorm(d)

    def __call__(self, feats: dict) -> tuple[Tensor, np.ndarray]:
        """Returns (tokens (B, N, d), valid mask (B, N)); the ego token is first."""
        b, a_max = feats["agent_valid"].shape
        l_max = feats["lane_valid"].shape[1]

        ego_tok = self.ego_norm(self.ego_mlp(Tensor(feats["ego"]))).reshape(b, 1, -1)
        ego_tok = ego_tok + self.type_emb[0]

        agent_tok = self.agent_norm(self.agent_mlp(Tensor(feats["agents"])))
        agent_tok = agent_tok + self.type_emb[1]

        lanes = Tensor(feats["lanes"].reshape(b * l_max, self.config.lane_points, LANE_POINT_F))
        point_feats = self.lane_point_mlp(lanes)           # (B*L, P, d)
        lane_tok = point_feats.max(axis=1)                 # max-pool over points
        lane_tok = self.lane_norm(lane_tok).reshape(b, l_max, -1)
        lane_tok = lane_tok + self.type_emb[2]

        tokens = nn.concat([ego_tok, agent_tok, lane_tok], axis=1)
        mask = np.concatenate([
            np.ones((b, 1), dtype=bool), feats["agent_valid"], feats["lane_valid"],
        ], axis=1)
        return tokens, mask


class DecoderBlock(nn.Module):
    """Transformer block; when `injected`, the attention sublayer adds a
    zero-gated cross-attention branch over the instruction feature.

    The query projection is shared between the self branch and the injected
    branch; the gate scales only the injected term.
    """

    def __init__(self, config: PlannerConfig, rng: np.random.Generator, injected: bool,
                 inj_rng: Optional[np.random.Generator] = None):
        d = config.d_model
        self.mha = nn.MultiHeadAttention(d, config.n_heads, rng)
        self.injected = injected
        if injected:
            # fresh projections draw from their own stream so base weights are
            # bit-identical between base and injected builds of the same seed
            inj_rng = inj_rng or np.random.default_rng(0)
            self.inj_k = nn.Linear(d, d, inj_rng, bias=False)
            self.inj_v = nn.Linear(d, d, inj_rng)
            self.gate = nn.Parameter(np.array(0.0))
        self.norm1 = nn.LayerNorm(d)
        self.norm2 = nn.LayerNorm(d)
        self.ffn_in = nn.Linear(d, d * config.ffn_mult, rng)
        self.ffn_out = nn.Linear(d * config.ffn_mult, d, rng)

    def attention_sum(self, tokens: Tensor, mask: np.ndarray,
                      feature: Optional[Tensor]) -> Tensor:
        """Self-attention plus the gated injected branch, before the output
        projection and feed-forward wiring."""
        q = self.mha._split(self.mha.q_proj(tokens))
        k = self.mha._split(self.mha.k_proj(tokens))
        v = self.mha._split(self.mha.v_proj(tokens))
        key_mask = mask[:, None, :] if mask is not None and mask.ndim == 2 else mask
        attn = nn.attention(q, k, v, key_mask)
        if self.injected and feature is not None:
            h = feature if feature.ndim == 3 else feature.reshape(feature.shape[0], 1, -1)
            k_h = self.mha._split(self.inj_k(h))
            v_h = self.mha._split(self.inj_v(h))
            attn = attn + self.gate * nn.attention(q, k_h, v_h)
        return self.mha._merge(attn)

    def __call__(self, tokens: Tensor, mask: np.ndarray,
                 feature: Optional[Tensor]) -> Tensor:
        attn = self.mha.out_proj(self.attention_sum(tokens, mask, feature))
        x = self.norm1(tokens + attn)
        return self.norm2(x + self.ffn_out(self.ffn_in(x).gelu()))


@dataclass
class GmmPrediction:
    """Per-agent mixture futures plus the ego trajectory.

    gmm: (B, A*m, T, 4) of (mu_x, mu_y, log_sigma_x, log_sigma_y);
    logits: (B, A, m); ego: (B, T, 3); agent_valid: (B, A) bool.
    """

    gmm: Tensor
    logits: Tensor
    ego: Tensor
    agent_valid: np.ndarray
    n_modes: int

    @property
    def means(self) -> np.ndarray:
        b, am, t, _ = self.gmm.shape
        return self.gmm.data[..., :2].reshape(b, am // self.n_modes, self.n_modes, t, 2)

    @property
    def sigmas(self) -> np.ndarray:
        b, am, t, _ = self.gmm.shape
        log_s = np.clip(self.gmm.data[..., 2:], -LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP)
        return np.exp(log_s).reshape(b, am // self.n_modes, self.n_modes, t, 2)

    @property
    def mode_probs(self) -> np.ndarray:
        z = self.logits.data - self.logits.data.max(axis=-1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=-1, keepdims=True)

    @property
    def ego_trajectory(self) -> np.ndarray:
        return self.ego.data


# Trajectory heads emit decameters (x10) so Xavier-scale outputs span the
# 8 s horizon from the start; log-sigmas are shifted so initial mixture
# residual terms are tame against tens-of-meters errors.
OUTPUT_SCALE = 10.0
LOG_SIGMA_SHIFT = 2.5


class PlannerNet(nn.Module):
    def __init__(self, config: PlannerConfig = PlannerConfig(), seed: int = 0,
                 injected: bool = True):
        rng = np.random.default_rng(seed)
        inj_rng = np.random.default_rng((seed, 0x1213))
        d = config.d_model
        self.config = config
        self.injected = injected
        self.encoder = SceneEncoder(config, rng)
        self.blocks = [DecoderBlock(config, rng, injected, inj_rng)
                       for _ in range(config.n_blocks)]
        self.mode_queries = nn.Parameter(rng.normal(0.0, 0.02, size=(config.n_modes, d)))
        self.mode_attn = nn.MultiHeadAttention(d, config.n_heads, rng)
        self.gmm_head = nn.MLP(d, config.head_hidden, config.horizon * 4, rng)
        self.logit_head = nn.MLP(d, config.head_hidden, 1, rng)
        self.ego_head = nn.MLP(d, config.ego_head_hidden, config.horizon * 3, rng)

    # -- inference/training forward ------------------------------------------

    def decode_features(self, feats: dict,
                        feature: Optional[Union[np.ndarray, Tensor]] = None,
                        precomputed: Optional[tuple[Tensor, np.ndarray]] = None) -> GmmPrediction:
        cfg = self.config
        tokens, mask = precomputed if precomputed is not None else self.encoder(feats)
        h = None
        if feature is not None:
            h = feature if isinstance(feature, Tensor) else Tensor(np.asarray(feature, dtype=np.float64))
            if h.ndim == 1:
                h = h.reshape(1, -1)
        for block in self.blocks:
            tokens = block(tokens, mask, h)

        b = tokens.shape[0]
        a_max = feats["agent_valid"].shape[1]
        ego_tok = tokens[:, 0]
        agent_tok = tokens[:, 1:1 + a_max]

        queries = (agent_tok.reshape(b, a_max, 1, cfg.d_model)
                   + self.mode_queries.reshape(1, 1, cfg.n_modes, cfg.d_model))
        queries = queries.reshape(b, a_max * cfg.n_modes, cfg.d_model)
        mode_feats = self.mode_attn(queries, tokens, key_mask=mask)

        raw = self.gmm_head(mode_feats).reshape(b, a_max * cfg.n_modes, cfg.horizon, 4)
        scale = np.ones(4)
        scale[:2] = OUTPUT_SCALE
        shift = np.zeros(4)
        shift[2:] = LOG_SIGMA_SHIFT
        gmm = raw * Tensor(scale) + Tensor(shift)
        logits = self.logit_head(mode_feats).reshape(b, a_max, cfg.n_modes)
        ego = self.ego_head(ego_tok).reshape(b, cfg.horizon, 3) * OUTPUT_SCALE
        return GmmPrediction(gmm=gmm, logits=logits, ego=ego,
                             agent_valid=feats["agent_valid"], n_modes=cfg.n_modes)

    def decode(self, scene: VectorScene,
               feature: Optional[np.ndarray] = None) -> GmmPrediction:
        feats = featurize_scenes([scene], self.config)
        return self.decode_features(feats, feature)


def best_modes(pred: GmmPrediction, agent_xy: np.ndarray) -> np.ndarray:
    """Per-agent mode index minimizing average displacement error vs ground truth."""
    means = pred.means                                     # (B, A, m, T, 2)
    diff = means - agent_xy[:, :, None, :, :]
    ade = np.sqrt((diff ** 2).sum(-1)).mean(-1)            # (B, A, m)
    return ade.argmin(axis=-1)


def planning_loss(pred: GmmPrediction, ego_gt: np.ndarray, agent_xy: np.ndarray,
                  agent_valid: Optional[np.ndarray] = None) -> tuple[Tensor, dict]:
    """Mixture NLL over best modes + mode cross-entropy + ego L1 (summed over
    timesteps). Masked agents contribute nothing.

    ego_gt: (B, T, 3); agent_xy: (B, A, T, 2).
    """
    b, am, t, _ = pred.gmm.shape
    m = pred.n_modes
    a = am // m
    valid = pred.agent_valid if agent_valid is None else agent_valid
    valid = np.asarray(valid, dtype=bool)

    modes = best_modes(pred, agent_xy)                     # (B, A)
    batch_idx = np.repeat(np.arange(b), a)
    flat_idx = (np.tile(np.arange(a), b) * m + modes.reshape(-1))
    selected = pred.gmm[batch_idx, flat_idx]               # (B*A, T, 4)

    gt = Tensor(agent_xy.reshape(b * a, t, 2))
    dx = selected[:, :, 0] - gt[:, :, 0]
    dy = selected[:, :, 1] - gt[:, :, 1]
    log_sx = selected[:, :, 2].clamp(-LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP)
    log_sy = selected[:, :, 3].clamp(-LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP)
    per_agent_nll = gaussian_nll_elements(dx, dy, log_sx, log_sy).sum(axis=1)  # (B*A,)

    weights = valid.reshape(-1).astype(np.float64)
    denom = max(weights.sum(), 1.0)
    nll = (per_agent_nll * Tensor(weights)).sum() * (1.0 / denom)

    ce = nn.cross_entropy(pred.logits.reshape(b * a, m), modes.reshape(-1),
                          weights=weights)

    ego_err = (pred.ego - Tensor(ego_gt)).abs().mean(axis=-1).sum(axis=-1)  # (B,)
    ego_l1 = ego_err.mean()

    total = nll + ce + ego_l1
    parts = {"nll": float(nll.data), "mode_ce": float(ce.data),
             "ego_l1": float(ego_l1.data), "plan": float(total.data)}
    return total, parts


def injection_param_prefixes(model: PlannerNet) -> tuple[str, ...]:
    prefixes = []
    for i in range(len(model.blocks)):
        prefixes += [f"blocks.{i}.inj_k", f"blocks.{i}.inj_v", f"blocks.{i}.gate"]
    return tuple(prefixes)


def save_planner(model: PlannerNet, path: Union[str, Path]) -> Path:
    config = dict(model.config.to_dict(), injected=model.injected)
    return nn.save_checkpoint(path, model.parameters(), config=config)


def load_planner(path: Union[str, Path], injected: Optional[bool] = None) -> PlannerNet:
    arrays, config = nn.load_checkpoint(path)
    cfg_injected = bool(config.pop("injected", False))
    model = PlannerNet(PlannerConfig.from_dict(config),
                       injected=cfg_injected if injected is None else injected)
    allow = injection_param_prefixes(model) if model.injected and not cfg_injected else ()
    nn.assign_parameters(model.parameters(), arrays, allow_missing=allow)
    return model


def load_base_weights(model: PlannerNet, path: Union[str, Path]) -> PlannerNet:
    """Restore base (non-injected) weights into an injected planner.

    Gates stay at zero and injection projections keep their fresh
    initialization; any other name or shape mismatch fails with the full
    offender list and no partial load.
    """
    arrays, _config = nn.load_checkpoint(path)
    nn.assign_parameters(model.parameters(), arrays,
                         allow_missing=injection_param_prefixes(model))
    return model
