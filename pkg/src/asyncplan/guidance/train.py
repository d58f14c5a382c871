"""Two-stage training.

Stage A fits the base planner alone on the planning loss. Stage B loads the
stage-A weights into an injected planner and trains it jointly with the
guidance encoder, feature adapter, and alignment heads on the combined
alignment + planning objective. Both stages are deterministic given the seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .. import nn
from ..datagen.frames import FinetuneSample
from ..planner.config import PlannerConfig
from ..planner.features import featurize_scenes
from ..planner.model import PlannerNet, load_base_weights, planning_loss
from .model import (
    AlignmentHeads,
    FeatureAdapter,
    GuidanceConfig,
    GuidanceNet,
    alignment_loss,
    total_loss,
)
from .tokens import pad_token_batch, tokenize_instructions


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, parts: dict):
        super().__init__(f"{message}; last loss parts: {parts}")
        self.parts = parts


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 16
    lr: float = 1e-4
    weight_decay: float = 0.01
    warmup_frac: float = 0.01
    seed: int = 0
    gate_lr_scale: float = 50.0   # zero-init gates move this much faster


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _pad_futures(samples: Sequence[FinetuneSample], max_agents: int):
    b = len(samples)
    t = samples[0].ego_future.shape[0]
    agent_gt = np.zeros((b, max_agents, t, 2))
    valid = np.zeros((b, max_agents), dtype=bool)
    for i, s in enumerate(samples):
        a = min(len(s.future_valid), max_agents)
        agent_gt[i, :a] = s.agent_futures[:a]
        valid[i, :a] = s.future_valid[:a]
    return agent_gt, valid


def plan_batch_loss(model: PlannerNet, samples: Sequence[FinetuneSample],
                    feature=None, precomputed=None):
    feats = featurize_scenes([s.scene for s in samples], model.config)
    pred = model.decode_features(feats, feature, precomputed=precomputed)
    ego_gt = np.stack([s.ego_future for s in samples])
    agent_gt, valid = _pad_futures(samples, model.config.max_agents)
    return planning_loss(pred, ego_gt, agent_gt, valid)


class JointModel(nn.Module):
    """Injected planner + guidance encoder + adapter + alignment heads."""

    def __init__(self, planner_config: PlannerConfig = PlannerConfig(),
                 guidance_config: Optional[GuidanceConfig] = None, seed: int = 0):
        guidance_config = guidance_config or GuidanceConfig(d_model=planner_config.d_model)
        self.planner = PlannerNet(planner_config, seed=seed, injected=True)
        self.guidance = GuidanceNet(guidance_config, seed=seed)
        self.adapter = FeatureAdapter(guidance_config, seed=seed)
        self.align = AlignmentHeads(guidance_config, seed=seed)
        self.guidance_config = guidance_config

    def forward_batch(self, samples: Sequence[FinetuneSample]):
        feats = featurize_scenes([s.scene for s in samples], self.planner.config)
        tokens, mask = self.planner.encoder(feats)
        ids, tmask = pad_token_batch(
            [tokenize_instructions(list(s.instructions)) for s in samples])
        hidden = self.guidance(tokens, mask, ids, tmask)
        h = self.adapter(hidden.h_last)

        pred = self.planner.decode_features(feats, h, precomputed=(tokens, mask))
        ego_gt = np.stack([s.ego_future for s in samples])
        agent_gt, valid = _pad_futures(samples, self.planner.config.max_agents)
        plan, plan_parts = planning_loss(pred, ego_gt, agent_gt, valid)

        align, align_parts = alignment_loss(self.align(hidden.h_last),
                                            [s.targets for s in samples])
        loss = total_loss(align, plan)
        parts = dict(plan_parts)
        parts.update(align_parts)
        parts["total"] = float(loss.data)
        return loss, parts


def _train_loop(model: nn.Module, loss_fn, train: Sequence[FinetuneSample],
                config: TrainConfig, stage: str) -> list[dict]:
    params = model.parameters()
    steps_per_epoch = math.ceil(len(train) / config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    opt = nn.AdamW(params, lr=config.lr, weight_decay=config.weight_decay,
                   warmup_steps=max(1, int(round(config.warmup_frac * total_steps))),
                   total_steps=total_steps,
                   lr_scales={"gate": config.gate_lr_scale})
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(config.epochs):
        for batch_idx in _batches(len(train), config.batch_size, rng):
            batch = [train[i] for i in batch_idx]
            opt.zero_grad()
            loss, parts = loss_fn(batch)
            if not math.isfinite(float(loss.data)):
                raise TrainingDiverged(
                    f"stage {stage}: non-finite loss at step {opt.step_count}", parts)
            loss.backward()
            lr = opt.step()
            history.append({"stage": stage, "epoch": epoch,
                            "step": opt.step_count, "lr": lr, **parts})
    return history


def train_stage_a(samples: Sequence[FinetuneSample], out_dir: str | Path,
                  config: TrainConfig = TrainConfig(),
                  planner_config: PlannerConfig = PlannerConfig()) -> tuple[PlannerNet, Path]:
    """Base planner on the planning loss alone."""
    train = [s for s in samples if s.split == "train"]
    if not train:
        raise ValueError("no training samples")
    model = PlannerNet(planner_config, seed=config.seed, injected=False)
    history = _train_loop(model, lambda batch: plan_batch_loss(model, batch),
                          train, config, stage="a")
    out = Path(out_dir)
    path = nn.save_checkpoint(out / "stage_a", model.parameters(),
                              config=dict(planner_config.to_dict(), injected=False))
    _write_history(out / "stage_a_log.json", history, config)
    return model, path


def train_stage_b(samples: Sequence[FinetuneSample], base_checkpoint: str | Path,
                  out_dir: str | Path, config: TrainConfig = TrainConfig(),
                  planner_config: PlannerConfig = PlannerConfig(),
                  guidance_config: Optional[GuidanceConfig] = None) -> tuple[JointModel, Path]:
    """Joint model on alignment + planning, starting from stage-A weights."""
    train = [s for s in samples if s.split == "train"]
    if not train:
        raise ValueError("no training samples")
    joint = JointModel(planner_config, guidance_config, seed=config.seed)
    load_base_weights(joint.planner, base_checkpoint)
    history = _train_loop(joint, joint.forward_batch, train, config, stage="b")
    out = Path(out_dir)
    path = nn.save_checkpoint(
        out / "stage_b", joint.parameters(),
        config={"planner": dict(planner_config.to_dict(), injected=True),
                "guidance": joint.guidance_config.to_dict()},
    )
    _write_history(out / "stage_b_log.json", history, config)
    return joint, path


def load_joint(path: str | Path) -> JointModel:
    arrays, config = nn.load_checkpoint(path)
    planner_raw = dict(config["planner"])
    planner_raw.pop("injected", None)
    joint = JointModel(PlannerConfig.from_dict(planner_raw),
                       GuidanceConfig.from_dict(config["guidance"]))
    nn.assign_parameters(joint.parameters(), arrays)
    return joint


def _write_history(path: Path, history: list[dict], config: TrainConfig) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"config": {"epochs": config.epochs, "batch_size": config.batch_size,
                      "lr": config.lr, "weight_decay": config.weight_decay,
                      "warmup_frac": config.warmup_frac, "seed": config.seed},
           "steps": history}
    path.write_text(json.dumps(doc))


def evaluate_alignment(joint: JointModel, samples: Sequence[FinetuneSample],
                       batch_size: int = 32) -> dict:
    """Held-out accuracy of the alignment heads (and x_va MAE)."""
    traf_hits, adj_hits, dec_hits, chg_hits = [], [], [], []
    va_errors = []
    for start in range(0, len(samples), batch_size):
        batch = samples[start:start + batch_size]
        feats = featurize_scenes([s.scene for s in batch], joint.planner.config)
        tokens, mask = joint.planner.encoder(feats)
        ids, tmask = pad_token_batch(
            [tokenize_instructions(list(s.instructions)) for s in batch])
        hidden = joint.guidance(tokens, mask, ids, tmask)
        preds = joint.align(hidden.h_last)
        traf_hits.extend(preds["traf"].data.argmax(-1) == [s.targets.x_traf for s in batch])
        dec_hits.extend(preds["dec"].data.argmax(-1) == [s.targets.x_dec for s in batch])
        adj_pred = preds["adj"].data > 0.0
        adj_gt = np.stack([s.targets.x_adj for s in batch]) > 0.5
        adj_hits.extend((adj_pred == adj_gt).all(axis=1))
        chg_hits.extend((preds["chg"].data[:, 0] > 0.0) == [s.targets.x_chg > 0.5 for s in batch])
        va_errors.append(np.abs(preds["va"].data - np.stack([s.targets.x_va for s in batch])))
    return {
        "traf_acc": float(np.mean(traf_hits)),
        "dec_acc": float(np.mean(dec_hits)),
        "adj_acc": float(np.mean(adj_hits)),
        "chg_acc": float(np.mean(chg_hits)),
        "va_mae": float(np.concatenate(va_errors).mean()),
        "n": len(samples),
    }
