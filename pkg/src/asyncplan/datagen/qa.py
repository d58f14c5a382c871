"""Rule-generated question/answer corpus over the waypoint, instruction, and
control conversion spectrum (six question types)."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..scene.geometry import to_frame, wrap_angle
from ..scene.types import PLAN_HORIZON_STEPS, TICK_DT, Trajectory
from ..sim.engine import RolloutLog
from .instructions import waypoints_to_control, waypoints_to_highlevel

QA_TYPES = (
    "waypoints_to_instruction",
    "waypoints_to_control",
    "instruction_to_waypoints",
    "instruction_to_control",
    "control_to_waypoints",
    "control_to_instruction",
)

SYSTEM_PROMPT = (
    "You are a motion planning assistant. Convert between ego waypoints "
    "(x, y in meters, sampled every 0.5 seconds over 8 seconds), high-level "
    "instructions (a velocity command and a routing command), and control "
    "values (velocity in m/s, acceleration in m/s^2)."
)

QA_TEXT_DT = 0.5
CONTROL_ACCEL_EPS = 0.2


@dataclass(frozen=True)
class QaRecord:
    qtype: str
    question: str
    answer: str
    provenance: dict

    def to_dict(self) -> dict:
        return {"qtype": self.qtype, "question": self.question,
                "answer": self.answer, "provenance": self.provenance}


def format_waypoints(xy: np.ndarray) -> str:
    return "[" + ", ".join(f"({x:.2f}, {y:.2f})" for x, y in xy) + "]"


def parse_waypoints(text: str) -> np.ndarray:
    pairs = re.findall(r"\((-?\d+\.\d+), (-?\d+\.\d+)\)", text)
    return np.array([[float(a), float(b)] for a, b in pairs])


def frame_waypoints(log: RolloutLog, frame: int) -> np.ndarray:
    """Ego-frame future waypoints at text granularity from a log frame."""
    records = log.records
    if frame + PLAN_HORIZON_STEPS > len(records) - 1:
        raise ValueError(f"frame {frame} lacks an 8 s future")
    anchor = records[frame].ego
    step = int(QA_TEXT_DT / TICK_DT)
    future = records[frame: frame + PLAN_HORIZON_STEPS + 1: step]
    xy = to_frame(np.array([[r.ego.x, r.ego.y] for r in future]),
                  anchor.x, anchor.y, anchor.heading)
    return xy


def _traj(xy: np.ndarray, dt: float = QA_TEXT_DT) -> Trajectory:
    pts = np.column_stack([xy, np.zeros(len(xy))])
    return Trajectory(dt=dt, points=pts)


def synthesize_waypoints(velocity_cmd: str, routing_cmd: str,
                         start_speed: float = 6.0) -> np.ndarray:
    """Waypoints consistent with a high-level instruction pair.

    The speed profile ramps linearly to a command-specific end speed; turns
    sweep 60 degrees of heading over the window.
    """
    v0 = max(start_speed, 4.0)
    end = {
        "accelerate": 1.5 * v0,
        "decelerate": 0.6 * v0,
        "stop": 0.2,
        "maintain speed": v0,
    }[velocity_cmd]
    n = int(8.0 / QA_TEXT_DT)
    speeds = np.linspace(v0, end, n)
    sweep = {"turn left": math.radians(60), "turn right": -math.radians(60),
             "go straight": 0.0}[routing_cmd]
    headings = np.linspace(0.0, sweep, n)
    steps = speeds * QA_TEXT_DT
    xy = np.zeros((n + 1, 2))
    xy[1:, 0] = np.cumsum(steps * np.cos(headings))
    xy[1:, 1] = np.cumsum(steps * np.sin(headings))
    return xy


def control_to_instruction_rule(velocity: float, accel: float) -> tuple[str, str]:
    if velocity < 0.5 or velocity + accel * 8.0 < 0.5:
        vel = "stop"
    elif accel > CONTROL_ACCEL_EPS:
        vel = "accelerate"
    elif accel < -CONTROL_ACCEL_EPS:
        vel = "decelerate"
    else:
        vel = "maintain speed"
    return vel, "go straight"


def synthesize_control_waypoints(velocity: float, accel: float) -> np.ndarray:
    n = int(8.0 / QA_TEXT_DT)
    times = np.arange(n) * QA_TEXT_DT
    speeds = np.maximum(0.0, velocity + accel * times)
    xy = np.zeros((n + 1, 2))
    xy[1:, 0] = np.cumsum(speeds * QA_TEXT_DT)
    return xy


def gen_planning_qa(log: RolloutLog, frame: int, qtype: str) -> QaRecord:
    """Render one QA record for a log frame."""
    if qtype not in QA_TYPES:
        raise ValueError(f"unknown qa type {qtype!r}")
    xy = frame_waypoints(log, frame)
    velocity_cmd, routing_cmd = waypoints_to_highlevel(_traj(xy))
    mean_v, mean_a = waypoints_to_control(_traj(xy))
    provenance = {"scenario_id": log.scenario_id, "frame": frame}
    wp_text = format_waypoints(xy)

    if qtype == "waypoints_to_instruction":
        question = (f"{SYSTEM_PROMPT}\nWaypoints: {wp_text}\n"
                    "Which high-level instruction do these waypoints follow?")
        answer = f"The ego should {velocity_cmd} and {routing_cmd}."
    elif qtype == "waypoints_to_control":
        question = (f"{SYSTEM_PROMPT}\nWaypoints: {wp_text}\n"
                    "What are the mean velocity and mean acceleration?")
        answer = f"velocity = {mean_v:.2f} m/s, acceleration = {mean_a:.2f} m/s^2."
    elif qtype == "instruction_to_waypoints":
        synth = synthesize_waypoints(velocity_cmd, routing_cmd, mean_v)
        question = (f"{SYSTEM_PROMPT}\nInstruction: {velocity_cmd} and {routing_cmd}, "
                    f"starting near {max(mean_v, 4.0):.2f} m/s.\n"
                    "Give waypoints that follow this instruction.")
        answer = f"Waypoints: {format_waypoints(synth)}"
    elif qtype == "instruction_to_control":
        synth = synthesize_waypoints(velocity_cmd, routing_cmd, mean_v)
        v, a = waypoints_to_control(_traj(synth))
        question = (f"{SYSTEM_PROMPT}\nInstruction: {velocity_cmd} and {routing_cmd}, "
                    f"starting near {max(mean_v, 4.0):.2f} m/s.\n"
                    "Give consistent control values.")
        answer = f"velocity = {v:.2f} m/s, acceleration = {a:.2f} m/s^2."
    elif qtype == "control_to_waypoints":
        synth = synthesize_control_waypoints(mean_v, mean_a)
        question = (f"{SYSTEM_PROMPT}\nControl: velocity = {mean_v:.2f} m/s, "
                    f"acceleration = {mean_a:.2f} m/s^2.\n"
                    "Give waypoints that follow this control.")
        answer = f"Waypoints: {format_waypoints(synth)}"
    else:  # control_to_instruction
        vel, routing = control_to_instruction_rule(mean_v, mean_a)
        question = (f"{SYSTEM_PROMPT}\nControl: velocity = {mean_v:.2f} m/s, "
                    f"acceleration = {mean_a:.2f} m/s^2.\n"
                    "Which high-level instruction matches this control?")
        answer = f"The ego should {vel} and {routing}."
    return QaRecord(qtype=qtype, question=question, answer=answer, provenance=provenance)


def qa_frames(log: RolloutLog) -> list[int]:
    """Frames with a full future, sampled every 4 s."""
    out = []
    step = int(4.0 / TICK_DT)
    for frame in range(0, len(log.records) - PLAN_HORIZON_STEPS - 1, step):
        out.append(frame)
    return out


def write_qa_corpus(records: Sequence[QaRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
    return path
