"""Planner hyperparameters, echoed into checkpoints."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..scene.types import HISTORY_LEN, MAX_AGENTS, PLAN_HORIZON_STEPS


@dataclass(frozen=True)
class PlannerConfig:
    d_model: int = 128
    n_heads: int = 4
    n_blocks: int = 3
    n_modes: int = 6
    horizon: int = PLAN_HORIZON_STEPS
    history: int = HISTORY_LEN
    max_agents: int = MAX_AGENTS
    lane_points: int = 20
    head_hidden: int = 256
    ego_head_hidden: int = 512
    ffn_mult: int = 4

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "PlannerConfig":
        return cls(**{k: int(v) for k, v in raw.items()})


# A tiny configuration for exhaustive finite-difference checks.
TINY_CONFIG = PlannerConfig(
    d_model=16, n_heads=2, n_blocks=3, n_modes=2,
    horizon=10, lane_points=6, head_hidden=16, ego_head_hidden=16, ffn_mult=2,
)
