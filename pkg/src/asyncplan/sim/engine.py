"""Deterministic 10 Hz closed-loop simulation."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from ..datagen.instructions import RoutingInstruction, route_instructions
from ..harness.schedule import (
    BackgroundWorker,
    FeatureCache,
    ScheduleConfig,
    get_feature,
    should_invoke,
)
from ..planner.types import D_MODEL, InstructionFeature
from ..scene.geometry import (
    from_frame,
    interpolate_polyline,
    obb_overlap,
    polyline_arc_lengths,
    project_to_polyline,
    wrap_angle,
)
from ..scene.kinematics import propagate_bicycle
from ..scene.types import (
    TICK_DT,
    AgentScript,
    AgentState,
    EgoState,
    Scenario,
    Trajectory,
)
from .idm import IdmParams, idm_accel
from .scene_builder import build_vector_scene
from .tracker import track_trajectory

AGENT_SCAN_RANGE = 100.0
AGENT_LANE_TOLERANCE = 2.0


class SimulationFinishedError(RuntimeError):
    pass


class SimulationAborted(RuntimeError):
    def __init__(self, message: str, log: "RolloutLog"):
        super().__init__(message)
        self.log = log


@dataclass(frozen=True)
class SimState:
    step: int
    clock: float
    ego: EgoState
    agents: tuple[AgentState, ...]
    lights: dict[str, str]
    pending_instructions: Optional[tuple[RoutingInstruction, ...]] = None


@dataclass(frozen=True)
class CollisionEvent:
    step: int
    agent_id: str
    agent_kind: str
    at_fault: bool
    ego_speed: float
    agent_speed: float

    def to_dict(self) -> dict:
        return {
            "step": self.step, "agent_id": self.agent_id, "agent_kind": self.agent_kind,
            "at_fault": self.at_fault, "ego_speed": self.ego_speed,
            "agent_speed": self.agent_speed,
        }


@dataclass(frozen=True)
class StepRecord:
    """State at decision time plus the plan and outcome of this tick."""

    step: int
    t: float
    ego: EgoState
    agents: tuple[AgentState, ...]
    lights: tuple[tuple[str, str], ...]
    plan: Trajectory
    instructions: tuple[RoutingInstruction, ...]
    guidance_invoked: bool
    feature_age: Optional[int]
    degraded: bool
    planner_ms: float
    guidance_ms: float
    collisions: tuple[CollisionEvent, ...] = ()


@dataclass
class RolloutLog:
    scenario_id: str
    config: dict
    records: list[StepRecord] = field(default_factory=list)
    aborted: bool = False
    abort_reason: Optional[str] = None

    def to_jsonl(self, include_timings: bool = True) -> bytes:
        lines = [json.dumps({"scenario_id": self.scenario_id, "config": self.config,
                             "aborted": self.aborted, "abort_reason": self.abort_reason},
                            sort_keys=True)]
        for r in self.records:
            lines.append(json.dumps(_record_to_dict(r, include_timings), sort_keys=True))
        return ("\n".join(lines) + "\n").encode("utf-8")

    def canonical_jsonl(self) -> bytes:
        """Deterministic serialization: simulation content without wall-clock timings."""
        return self.to_jsonl(include_timings=False)

    @property
    def collisions(self) -> list[CollisionEvent]:
        return [c for r in self.records for c in r.collisions]


def _ego_to_dict(ego: EgoState) -> dict:
    return {"x": ego.x, "y": ego.y, "heading": ego.heading, "vx": ego.vx, "vy": ego.vy,
            "ax": ego.ax, "ay": ego.ay, "steering": ego.steering,
            "half_length": ego.half_length, "half_width": ego.half_width}


def _agent_to_dict(a: AgentState) -> dict:
    return {"id": a.id, "x": a.x, "y": a.y, "heading": a.heading, "speed": a.speed,
            "half_length": a.half_length, "half_width": a.half_width, "kind": a.kind}


def _record_to_dict(r: StepRecord, include_timings: bool) -> dict:
    out = {
        "step": r.step,
        "t": r.t,
        "ego": _ego_to_dict(r.ego),
        "agents": [_agent_to_dict(a) for a in r.agents],
        "lights": {k: v for k, v in r.lights},
        "plan": r.plan.points.tolist(),
        "instructions": [i.to_dict() for i in r.instructions],
        "guidance_invoked": r.guidance_invoked,
        "feature_age": r.feature_age,
        "degraded": r.degraded,
        "collisions": [c.to_dict() for c in r.collisions],
    }
    if include_timings:
        out["timings"] = {"planner_ms": r.planner_ms, "guidance_ms": r.guidance_ms}
    return out


def load_rollout_jsonl(data: bytes) -> RolloutLog:
    lines = data.decode("utf-8").strip().split("\n")
    head = json.loads(lines[0])
    log = RolloutLog(scenario_id=head["scenario_id"], config=head["config"],
                     aborted=head["aborted"], abort_reason=head["abort_reason"])
    for line in lines[1:]:
        raw = json.loads(line)
        timings = raw.get("timings", {})
        log.records.append(StepRecord(
            step=raw["step"],
            t=raw["t"],
            ego=EgoState(**raw["ego"]),
            agents=tuple(AgentState(**a) for a in raw["agents"]),
            lights=tuple(sorted(raw["lights"].items())),
            plan=Trajectory(dt=TICK_DT, points=np.asarray(raw["plan"]), start_time=raw["t"]),
            instructions=tuple(RoutingInstruction.from_dict(i) for i in raw["instructions"]),
            guidance_invoked=raw["guidance_invoked"],
            feature_age=raw["feature_age"],
            degraded=raw["degraded"],
            planner_ms=timings.get("planner_ms", 0.0),
            guidance_ms=timings.get("guidance_ms", 0.0),
            collisions=tuple(CollisionEvent(**c) for c in raw["collisions"]),
        ))
    return log


class _IdmMotion:
    """Car-following along a lane chain (the lane plus transitive successors)."""

    def __init__(self, script: AgentScript, scenario: Scenario):
        lanes = {lane.id: lane for lane in scenario.lanes}
        lane_id = script.lane_id or self._nearest_lane(script.state, scenario)
        chain_ids = [lane_id]
        while lanes[chain_ids[-1]].successors:
            nxt = lanes[chain_ids[-1]].successors[0]
            if nxt in chain_ids:
                break
            chain_ids.append(nxt)
        pieces = []
        self.lane_entries: list[tuple[float, str]] = []
        offset = 0.0
        for cid in chain_ids:
            center = np.asarray(lanes[cid].centerline)
            if pieces and np.allclose(pieces[-1][-1], center[0]):
                center = center[1:]
            self.lane_entries.append((offset, cid))
            pieces.append(center)
            offset = float(polyline_arc_lengths(np.vstack(pieces))[-1])
        self.chain = np.vstack(pieces)
        self.chain_len = float(polyline_arc_lengths(self.chain)[-1])
        self.arc, _ = project_to_polyline(script.state.x, script.state.y, self.chain)
        self.speed = script.state.speed
        v0 = script.target_speed or lanes[lane_id].speed_limit
        self.params = IdmParams(v0=max(0.5, v0))
        self.state = script.state

    @staticmethod
    def _nearest_lane(state: AgentState, scenario: Scenario) -> str:
        return min(
            scenario.lanes,
            key=lambda lane: project_to_polyline(state.x, state.y, lane.centerline)[1],
        ).id

    def advance(self, others: Sequence[AgentState], ego: EgoState,
                lights: dict[str, str]) -> AgentState:
        gap, v_lead = None, None

        def consider(candidate_gap, candidate_speed):
            nonlocal gap, v_lead
            if gap is None or candidate_gap < gap:
                gap, v_lead = candidate_gap, candidate_speed

        half = self.state.half_length
        for other in others:
            if other.id == self.state.id:
                continue
            arc, lateral = project_to_polyline(other.x, other.y, self.chain)
            ahead = arc - self.arc
            if lateral > AGENT_LANE_TOLERANCE or ahead <= 0 or ahead > AGENT_SCAN_RANGE:
                continue
            consider(max(ahead - half - other.half_length, 1e-3), other.speed)
        ego_arc, ego_lat = project_to_polyline(ego.x, ego.y, self.chain)
        ego_ahead = ego_arc - self.arc
        if ego_lat <= AGENT_LANE_TOLERANCE and 0 < ego_ahead <= AGENT_SCAN_RANGE:
            consider(max(ego_ahead - half - ego.half_length, 1e-3), ego.speed)
        for entry_arc, lane_id in self.lane_entries:
            if lights.get(lane_id) in ("red", "yellow") and entry_arc > self.arc + 0.5:
                consider(max(entry_arc - self.arc - half, 1e-3), 0.0)

        accel = idm_accel(self.speed, v_lead, gap, self.params)
        self.speed = max(0.0, self.speed + accel * TICK_DT)
        self.arc = min(self.chain_len, self.arc + self.speed * TICK_DT)
        if self.arc >= self.chain_len:
            self.speed = 0.0
        x, y, heading = interpolate_polyline(self.chain, self.arc)
        self.state = replace(self.state, x=x, y=y, heading=heading, speed=self.speed)
        return self.state


class _ScriptMotion:
    """Polyline follower with per-segment speeds; holds its last pose at the end."""

    def __init__(self, script: AgentScript):
        self.state = script.state
        self.polyline = np.asarray(script.polyline)
        self.speeds = np.asarray(script.speeds)
        self.arcs = polyline_arc_lengths(self.polyline) if len(self.polyline) else np.zeros(1)
        self.total = float(self.arcs[-1]) if len(self.polyline) >= 2 else 0.0
        self.arc = 0.0

    def advance(self, *_args) -> AgentState:
        if self.total <= 0.0:
            if self.state.speed != 0.0:
                self.state = replace(self.state, speed=0.0)
            return self.state
        seg = min(int(np.searchsorted(self.arcs, self.arc, side="right")) - 1, len(self.speeds) - 1)
        speed = float(self.speeds[max(seg, 0)])
        self.arc += speed * TICK_DT
        if self.arc >= self.total:
            self.arc = self.total
            speed = 0.0
        x, y, heading = interpolate_polyline(self.polyline, self.arc)
        self.state = replace(self.state, x=x, y=y, heading=heading, speed=speed)
        return self.state


InstructionFn = Callable[[object], list[RoutingInstruction]]


class Simulation:
    """Owns one closed-loop session; single-threaded stepping."""

    def __init__(
        self,
        scenario: Scenario,
        planner,
        guidance: Optional[Callable] = None,
        schedule: Optional[ScheduleConfig] = None,
        tracker_mode: str = "replay",
        instruction_fn: Optional[InstructionFn] = None,
        feature_dim: int = D_MODEL,
        control_noise: Optional[tuple[float, float]] = None,
    ):
        self.scenario = scenario
        self.planner = planner
        self.guidance = guidance
        self.schedule = schedule or ScheduleConfig()
        self.tracker_mode = tracker_mode
        self.instruction_fn = instruction_fn or (lambda scene: route_instructions(scene))
        self.n_steps = scenario.n_steps
        # (accel_std, steer_std) perturbation for perturb-and-recover data
        # collection; seeded by the scenario for determinism
        self.control_noise = control_noise
        self._noise_rng = np.random.default_rng((scenario.seed, 0xC0))

        lights = {lane.id: lane.traffic_light for lane in scenario.lanes}
        for event in scenario.light_schedule:
            if event.time <= 0.0:
                lights[event.lane_id] = event.state
        self.state = SimState(
            step=0, clock=0.0, ego=scenario.ego,
            agents=tuple(s.state for s in scenario.agents),
            lights=lights, pending_instructions=None,
        )
        self._motions = [
            _IdmMotion(s, scenario) if s.behavior == "idm" else _ScriptMotion(s)
            for s in scenario.agents
        ]
        self._history: list[tuple[EgoState, tuple[AgentState, ...]]] = []
        self._overlapping: set[str] = set()
        self.cache = FeatureCache(feature_dim)
        self.worker = BackgroundWorker(self.cache) if (
            guidance and self.schedule.mode == "background") else None
        self.log = RolloutLog(
            scenario_id=scenario.id,
            config={
                "planner": getattr(planner, "name", type(planner).__name__),
                "interval_k": self.schedule.interval_k,
                "mode": self.schedule.mode,
                "tracker": tracker_mode,
                "guidance": bool(guidance),
                "seed": scenario.seed,
            },
        )

    @property
    def finished(self) -> bool:
        return self.state.step >= self.n_steps or self.log.aborted

    def inject_instruction(self, instruction: RoutingInstruction) -> None:
        """Operator override, applied from the next step on (last write wins)."""
        self.state = replace(self.state, pending_instructions=(instruction,))

    def set_interval(self, k: int) -> None:
        self.schedule = replace(self.schedule, interval_k=k)

    def build_scene(self):
        history = self._history + [(self.state.ego, self.state.agents)]
        return build_vector_scene(
            [h[0] for h in history],
            [h[1] for h in history],
            self.scenario.lanes,
            self.state.lights,
            self.scenario.route_lane_ids,
        )

    def step(self) -> StepRecord:
        if self.finished:
            raise SimulationFinishedError(f"scenario {self.scenario.id} already finished")
        state = self.state
        self._history.append((state.ego, state.agents))
        if len(self._history) > 24:
            del self._history[0]

        scene = self.build_scene()
        if state.pending_instructions is not None:
            instructions = list(state.pending_instructions)
        else:
            instructions = self.instruction_fn(scene)

        feature = None
        guidance_ms = 0.0
        invoked = False
        if self.guidance is not None:
            invoked = should_invoke(state.step, self.schedule.interval_k)
            t0 = time.perf_counter()
            feature = get_feature(
                self.cache, state.step, self.schedule,
                lambda: self.guidance(scene, instructions), worker=self.worker)
            guidance_ms = (time.perf_counter() - t0) * 1e3

        t0 = time.perf_counter()
        try:
            plan_rel = self.planner.plan(scene, instructions, feature)
        except Exception as exc:
            self.log.aborted = True
            self.log.abort_reason = f"planner failed at step {state.step}: {exc!r}"
            raise SimulationAborted(self.log.abort_reason, self.log) from exc
        planner_ms = (time.perf_counter() - t0) * 1e3

        plan_world = _to_world(plan_rel, state.ego)
        accel, steer = track_trajectory(state.ego, plan_world, self.tracker_mode)
        if self.control_noise is not None and state.ego.speed > 1.0:
            # perturb only when moving; a creeping stationary ego would nudge
            # into jam traffic
            accel += self._noise_rng.normal(0.0, self.control_noise[0])
            steer += self._noise_rng.normal(0.0, self.control_noise[1])
        new_ego = propagate_bicycle(state.ego, accel, steer, TICK_DT)

        snapshot = state.agents
        new_agents = tuple(
            motion.advance(snapshot, new_ego, state.lights) for motion in self._motions
        )

        new_step = state.step + 1
        new_clock = new_step * TICK_DT
        new_lights = dict(state.lights)
        for event in self.scenario.light_schedule:
            if state.clock < event.time <= new_clock:
                new_lights[event.lane_id] = event.state

        collisions = self._detect_collisions(new_step - 1, new_ego, new_agents)

        record = StepRecord(
            step=state.step,
            t=state.clock,
            ego=state.ego,
            agents=state.agents,
            lights=tuple(sorted(state.lights.items())),
            plan=plan_world,
            instructions=tuple(instructions),
            guidance_invoked=invoked,
            feature_age=feature.age if feature is not None else None,
            degraded=self.cache.degraded if self.guidance else False,
            planner_ms=planner_ms,
            guidance_ms=guidance_ms,
            collisions=collisions,
        )
        self.log.records.append(record)
        self.state = SimState(
            step=new_step, clock=new_clock, ego=new_ego, agents=new_agents,
            lights=new_lights, pending_instructions=state.pending_instructions,
        )
        return record

    def _detect_collisions(self, step, ego, agents) -> tuple[CollisionEvent, ...]:
        events = []
        now_overlapping = set()
        for agent in agents:
            if obb_overlap(ego.x, ego.y, ego.heading, ego.half_length, ego.half_width,
                           agent.x, agent.y, agent.heading, agent.half_length, agent.half_width):
                now_overlapping.add(agent.id)
                if agent.id in self._overlapping:
                    continue
                rel = np.array([agent.x - ego.x, agent.y - ego.y])
                along = rel[0] * math.cos(ego.heading) + rel[1] * math.sin(ego.heading)
                at_fault = ego.speed > 0.05 and (along > 0 or agent.speed < 0.05)
                events.append(CollisionEvent(
                    step=step, agent_id=agent.id, agent_kind=agent.kind,
                    at_fault=at_fault, ego_speed=ego.speed, agent_speed=agent.speed,
                ))
        self._overlapping = now_overlapping
        return tuple(events)

    def run(self) -> RolloutLog:
        while not self.finished:
            self.step()
        return self.log

    def close(self) -> None:
        if self.worker is not None:
            self.worker.close()


def _to_world(plan: Trajectory, ego: EgoState) -> Trajectory:
    xy = from_frame(plan.xy, ego.x, ego.y, ego.heading)
    headings = np.array([wrap_angle(h + ego.heading) for h in plan.points[:, 2]])
    return Trajectory(dt=plan.dt, points=np.column_stack([xy, headings]),
                      start_time=plan.start_time)


def run_closed_loop(
    scenario: Scenario,
    planner,
    guidance: Optional[Callable] = None,
    schedule: Optional[ScheduleConfig] = None,
    tracker_mode: str = "replay",
    instruction_fn: Optional[InstructionFn] = None,
) -> RolloutLog:
    """Roll a scenario to completion and return the full log."""
    sim = Simulation(scenario, planner, guidance=guidance, schedule=schedule,
                     tracker_mode=tracker_mode, instruction_fn=instruction_fn)
    try:
        return sim.run()
    finally:
        sim.close()
