from .types import (
    TICK_DT,
    HISTORY_LEN,
    MAX_AGENTS,
    PLAN_HORIZON_STEPS,
    EGO_HALF_LENGTH,
    EGO_HALF_WIDTH,
    EGO_WHEELBASE,
    AgentHistory,
    AgentScript,
    AgentState,
    EgoState,
    InvalidStateError,
    Lane,
    LightSchedule,
    Scenario,
    Trajectory,
    VectorScene,
)
from .kinematics import arc_length, propagate_bicycle, resample_trajectory
from .geometry import wrap_angle
from .generate import ARCHETYPES, generate_scenario
from .serialize import ScenarioParseError, load_scenario, save_scenario

__all__ = [
    "TICK_DT",
    "HISTORY_LEN",
    "MAX_AGENTS",
    "PLAN_HORIZON_STEPS",
    "EGO_HALF_LENGTH",
    "EGO_HALF_WIDTH",
    "EGO_WHEELBASE",
    "AgentHistory",
    "AgentScript",
    "AgentState",
    "EgoState",
    "InvalidStateError",
    "Lane",
    "LightSchedule",
    "Scenario",
    "Trajectory",
    "VectorScene",
    "arc_length",
    "propagate_bicycle",
    "resample_trajectory",
    "wrap_angle",
    "ARCHETYPES",
    "generate_scenario",
    "ScenarioParseError",
    "load_scenario",
    "save_scenario",
]
