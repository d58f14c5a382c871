from .idm import B_MAX_EMERGENCY, IdmParams, idm_accel
from .tracker import track_trajectory
from .scene_builder import build_vector_scene
from .planners import IdmPlanner, Planner
from .engine import (
    CollisionEvent,
    RolloutLog,
    SimState,
    StepRecord,
    Simulation,
    SimulationAborted,
    SimulationFinishedError,
    load_rollout_jsonl,
    run_closed_loop,
)

__all__ = [
    "B_MAX_EMERGENCY", "IdmParams", "idm_accel",
    "track_trajectory", "build_vector_scene",
    "IdmPlanner", "Planner",
    "CollisionEvent", "RolloutLog", "SimState", "StepRecord", "Simulation",
    "SimulationAborted", "SimulationFinishedError", "load_rollout_jsonl",
    "run_closed_loop",
]
