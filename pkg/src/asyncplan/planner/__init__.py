from .types import D_MODEL, InstructionFeature
from .config import PlannerConfig, TINY_CONFIG
from .features import featurize_scenes
from .model import (
    DecoderBlock,
    GmmPrediction,
    PlannerNet,
    SceneEncoder,
    best_modes,
    load_base_weights,
    load_planner,
    planning_loss,
    save_planner,
)
from .proposals import proposal_score, score_proposals, trajectory_variants
from .runtime import LearnedPlanner

__all__ = [
    "D_MODEL", "InstructionFeature",
    "PlannerConfig", "TINY_CONFIG", "featurize_scenes",
    "DecoderBlock", "GmmPrediction", "PlannerNet", "SceneEncoder",
    "best_modes", "load_base_weights", "load_planner", "planning_loss", "save_planner",
    "LearnedPlanner", "proposal_score", "score_proposals", "trajectory_variants",
]
