"""HTTP/WebSocket service exposing live closed-loop sessions."""

from __future__ import annotations

import asyncio
import itertools
import threading
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..datagen.instructions import Command, RoutingInstruction
from ..metrics import compute_report
from ..scene.generate import ARCHETYPES, generate_scenario
from ..scene.serialize import load_scenario
from ..scene.types import Scenario
from ..sim.engine import Simulation, SimulationAborted, StepRecord
from ..sim.planners import IdmPlanner
from .config import AppConfig
from .schedule import ScheduleConfig

PLANNER_NAMES = ("idm", "learned", "learned_scored")


class CreateSession(BaseModel):
    scenario_id: Optional[str] = None
    scenario: Optional[dict] = None
    planner: str = "idm"
    interval_k: int = Field(default=1, ge=1)
    mode: str = "blocking"


class StepRequest(BaseModel):
    n: int = Field(default=1, ge=1, le=1000)


class InstructionRequest(BaseModel):
    cmd: str
    distance_m: float = Field(default=0.0, ge=0.0)


class IntervalRequest(BaseModel):
    k: int = Field(ge=1)


def record_frame(record: StepRecord, finished: bool) -> dict:
    return {
        "step": record.step,
        "t": record.t,
        "ego": {"x": record.ego.x, "y": record.ego.y, "heading": record.ego.heading,
                "speed": record.ego.speed},
        "agents": [
            {"id": a.id, "x": a.x, "y": a.y, "heading": a.heading, "speed": a.speed,
             "half_length": a.half_length, "half_width": a.half_width, "kind": a.kind}
            for a in record.agents
        ],
        "plan": record.plan.points[:, :2].tolist(),
        "instructions": [i.to_dict() for i in record.instructions],
        "feature_age": record.feature_age,
        "degraded": record.degraded,
        "guidance_invoked": record.guidance_invoked,
        "timings": {"planner_ms": record.planner_ms, "guidance_ms": record.guidance_ms},
        "collisions": len(record.collisions),
        "lights": {k: v for k, v in record.lights},
        "finished": finished,
    }


class SessionRunner:
    """One live simulation; stepping is serialized under a lock."""

    def __init__(self, session_id: str, scenario: Scenario, planner, guidance,
                 schedule: ScheduleConfig):
        self.id = session_id
        self.scenario = scenario
        self.sim = Simulation(scenario, planner, guidance=guidance, schedule=schedule)
        self.lock = threading.Lock()
        self.frames: list[dict] = []
        self.error: Optional[str] = None

    def step(self, n: int) -> dict:
        with self.lock:
            for _ in range(n):
                if self.sim.finished:
                    break
                try:
                    record = self.sim.step()
                except SimulationAborted as exc:
                    self.error = str(exc)
                    break
                self.frames.append(record_frame(record, self.sim.finished))
            return self.state()

    def state(self) -> dict:
        if self.frames:
            frame = dict(self.frames[-1])
            frame["finished"] = self.sim.finished
            return frame
        return {"step": -1, "t": 0.0,
                "ego": {"x": self.sim.state.ego.x, "y": self.sim.state.ego.y,
                        "heading": self.sim.state.ego.heading,
                        "speed": self.sim.state.ego.speed},
                "agents": [], "plan": [], "instructions": [],
                "feature_age": None, "degraded": False, "guidance_invoked": False,
                "timings": {"planner_ms": 0.0, "guidance_ms": 0.0},
                "collisions": 0, "lights": {}, "finished": self.sim.finished}

    def lanes_payload(self) -> list[dict]:
        return [
            {"id": lane.id, "centerline": lane.centerline.tolist(),
             "polygon": lane.drivable_polygon.tolist(),
             "speed_limit": lane.speed_limit,
             "on_route": lane.id in self.scenario.route_lane_ids}
            for lane in self.scenario.lanes
        ]


def load_scenario_library(config: AppConfig) -> dict[str, Scenario]:
    library: dict[str, Scenario] = {}
    if config.scenario_dir:
        for path in sorted(Path(config.scenario_dir).glob("*.json")):
            scenario = load_scenario(path.read_bytes())
            library[scenario.id] = scenario
    if not library:
        for archetype in ARCHETYPES:
            for seed in range(config.default_seeds):
                scenario = generate_scenario(archetype, seed, duration=config.default_duration)
                library[scenario.id] = scenario
    return library


def create_app(config: Optional[AppConfig] = None) -> FastAPI:
    config = config or AppConfig()
    app = FastAPI(title="asyncplan", version="0.1.0")
    library = load_scenario_library(config)
    sessions: dict[str, SessionRunner] = {}
    counter = itertools.count(1)

    joint = None
    if config.checkpoint:
        from ..guidance.train import load_joint
        joint = load_joint(config.checkpoint)

    def build_planner(name: str):
        if name == "idm":
            return IdmPlanner(), None
        if name in ("learned", "learned_scored"):
            if joint is None:
                raise HTTPException(400, "no checkpoint configured for learned planners")
            from ..guidance.runtime import LearnedGuidance
            from ..planner.runtime import LearnedPlanner
            planner = LearnedPlanner(joint.planner, use_scorer=(name == "learned_scored"))
            guidance = LearnedGuidance(joint.planner, joint.guidance, joint.adapter)
            return planner, guidance
        raise HTTPException(400, f"unknown planner {name!r}; expected {PLANNER_NAMES}")

    def get_session(session_id: str) -> SessionRunner:
        if session_id not in sessions:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return sessions[session_id]

    @app.get("/scenarios")
    def list_scenarios():
        return [{"id": s.id, "archetype": s.archetype, "duration_s": s.duration}
                for s in library.values()]

    @app.post("/sessions")
    def create_session(request: CreateSession):
        if request.scenario is not None:
            import json as _json
            scenario = load_scenario(_json.dumps(request.scenario).encode())
        elif request.scenario_id is not None:
            if request.scenario_id not in library:
                raise HTTPException(404, f"unknown scenario {request.scenario_id!r}")
            scenario = library[request.scenario_id]
        else:
            raise HTTPException(400, "need scenario_id or inline scenario")
        planner, guidance = build_planner(request.planner)
        try:
            schedule = ScheduleConfig(interval_k=request.interval_k, mode=request.mode)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from None
        session_id = f"s{next(counter):04d}"
        sessions[session_id] = SessionRunner(session_id, scenario, planner, guidance, schedule)
        return {"session_id": session_id, "scenario_id": scenario.id,
                "steps_total": scenario.n_steps}

    @app.post("/sessions/{session_id}/step")
    def step_session(session_id: str, request: StepRequest):
        return get_session(session_id).step(request.n)

    @app.post("/sessions/{session_id}/instruction")
    def inject_instruction(session_id: str, request: InstructionRequest):
        session = get_session(session_id)
        try:
            cmd = Command(request.cmd)
            instruction = RoutingInstruction(
                cmd, 0.0 if cmd == Command.STOP else request.distance_m)
        except ValueError as exc:
            raise HTTPException(422, f"invalid instruction: {exc}") from None
        with session.lock:
            session.sim.inject_instruction(instruction)
        return {"ok": True, "active_next_step": instruction.to_dict()}

    @app.post("/sessions/{session_id}/interval")
    def set_interval(session_id: str, request: IntervalRequest):
        session = get_session(session_id)
        with session.lock:
            session.sim.set_interval(request.k)
        return {"ok": True, "interval_k": request.k}

    @app.get("/sessions/{session_id}/state")
    def session_state(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {"session_id": session_id, "scenario_id": session.scenario.id,
                    "frame": session.state(), "lanes": session.lanes_payload(),
                    "error": session.error}

    @app.get("/sessions/{session_id}/metrics")
    def session_metrics(session_id: str):
        session = get_session(session_id)
        with session.lock:
            if len(session.sim.log.records) < 4:
                return {"pending": True, "reason": "needs at least 4 frames"}
            report = compute_report(session.sim.log, session.scenario)
        return report.to_dict()

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        await websocket.accept()
        if session_id not in sessions:
            await websocket.close(code=4004, reason="unknown session")
            return
        session = sessions[session_id]
        cursor = 0
        try:
            while True:
                frames = session.frames
                if cursor < len(frames):
                    await websocket.send_json(frames[cursor])
                    cursor += 1
                else:
                    await asyncio.sleep(0.02)
        except (WebSocketDisconnect, RuntimeError):
            return

    ui_dir = config.ui_dir or str(Path(__file__).resolve().parents[3] / "frontend" / "dist")
    if Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/ui")
        def ui_placeholder():
            return HTMLResponse(
                "<html><body><h3>UI not built</h3>"
                "<p>Run <code>npm install && npm run build</code> in frontend/.</p>"
                "</body></html>")

    return app


def serve(config: Optional[AppConfig] = None) -> None:
    import uvicorn

    config = config or AppConfig()
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
