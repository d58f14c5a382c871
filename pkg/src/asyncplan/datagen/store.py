"""Fine-tune dataset persistence: JSON-lines index plus one fp64 blob."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from ..guidance.model import AlignmentTargets
from ..scene.types import AgentHistory, HISTORY_LEN, Lane, VectorScene
from .frames import FinetuneSample
from .instructions import RoutingInstruction

INDEX_NAME = "index.jsonl"
BLOB_NAME = "tensors.bin"


class _BlobWriter:
    def __init__(self):
        self.buffer = bytearray()

    def put(self, array: np.ndarray) -> dict:
        data = np.asarray(array, dtype=np.float64)
        entry = {"shape": list(data.shape), "offset": len(self.buffer)}
        self.buffer.extend(data.astype("<f8").tobytes())
        return entry


def _read(blob: bytes, entry: dict) -> np.ndarray:
    shape = tuple(entry["shape"])
    count = int(np.prod(shape)) if shape else 1
    return np.frombuffer(blob, dtype="<f8", count=count,
                         offset=entry["offset"]).reshape(shape).copy()


def save_dataset(samples: Sequence[FinetuneSample], path: str | Path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    writer = _BlobWriter()
    lines = []
    for s in samples:
        scene = s.scene
        arrays = {
            "ego_history": writer.put(np.array(
                [[e.x, e.y, e.heading, e.vx, e.vy, e.ax, e.ay, e.steering,
                  e.half_length, e.half_width] for e in scene.ego_history])),
            "agent_states": writer.put(
                np.stack([t.states for t in scene.agents])
                if scene.agents else np.zeros((0, HISTORY_LEN, 4))),
            "agent_valid": writer.put(
                np.stack([t.valid for t in scene.agents]).astype(np.float64)
                if scene.agents else np.zeros((0, HISTORY_LEN))),
            "ego_future": writer.put(s.ego_future),
            "agent_futures": writer.put(s.agent_futures),
            "future_valid": writer.put(s.future_valid.astype(np.float64)),
            "x_va": writer.put(s.targets.x_va),
            "x_adj": writer.put(s.targets.x_adj),
        }
        lane_arrays = []
        for lane in scene.lanes:
            lane_arrays.append({
                "centerline": writer.put(lane.centerline),
                "polygon": writer.put(lane.drivable_polygon),
            })
        lines.append(json.dumps({
            "scenario_id": s.scenario_id,
            "archetype": s.archetype,
            "t": s.t,
            "split": s.split,
            "instructions": [i.to_dict() for i in s.instructions],
            "targets": {"x_dec": s.targets.x_dec, "x_traf": s.targets.x_traf,
                        "x_chg": s.targets.x_chg},
            "agents": [{"id": t.id, "kind": t.kind, "half_length": t.half_length,
                        "half_width": t.half_width} for t in scene.agents],
            "lanes": [{"id": lane.id, "speed_limit": lane.speed_limit,
                       "left": lane.left_neighbor, "right": lane.right_neighbor,
                       "traffic_light": lane.traffic_light,
                       "successors": list(lane.successors), **arrs}
                      for lane, arrs in zip(scene.lanes, lane_arrays)],
            "route": list(scene.route_lane_ids),
            "arrays": arrays,
        }, sort_keys=True))
    (path / INDEX_NAME).write_text("\n".join(lines) + "\n")
    (path / BLOB_NAME).write_bytes(bytes(writer.buffer))
    return path


def load_dataset(path: str | Path) -> list[FinetuneSample]:
    path = Path(path)
    blob = (path / BLOB_NAME).read_bytes()
    samples = []
    for line in (path / INDEX_NAME).read_text().strip().split("\n"):
        raw = json.loads(line)
        arrays = raw["arrays"]
        from ..scene.types import EgoState

        ego_hist = tuple(
            EgoState(x=r[0], y=r[1], heading=r[2], vx=r[3], vy=r[4], ax=r[5],
                     ay=r[6], steering=r[7], half_length=r[8], half_width=r[9])
            for r in _read(blob, arrays["ego_history"])
        )
        agent_states = _read(blob, arrays["agent_states"])
        agent_valid = _read(blob, arrays["agent_valid"]).astype(bool)
        agents = tuple(
            AgentHistory(id=meta["id"], kind=meta["kind"],
                         half_length=meta["half_length"], half_width=meta["half_width"],
                         states=agent_states[j], valid=agent_valid[j])
            for j, meta in enumerate(raw["agents"])
        )
        lanes = tuple(
            Lane(id=meta["id"], centerline=_read(blob, meta["centerline"]),
                 speed_limit=meta["speed_limit"], left_neighbor=meta["left"],
                 right_neighbor=meta["right"], traffic_light=meta["traffic_light"],
                 successors=tuple(meta["successors"]),
                 drivable_polygon=_read(blob, meta["polygon"]))
            for meta in raw["lanes"]
        )
        scene = VectorScene(ego_history=ego_hist, agents=agents, lanes=lanes,
                            route_lane_ids=tuple(raw["route"]))
        targets = AlignmentTargets(
            x_va=_read(blob, arrays["x_va"]),
            x_dec=int(raw["targets"]["x_dec"]),
            x_traf=int(raw["targets"]["x_traf"]),
            x_adj=_read(blob, arrays["x_adj"]),
            x_chg=float(raw["targets"]["x_chg"]),
        )
        samples.append(FinetuneSample(
            scene=scene,
            instructions=tuple(RoutingInstruction.from_dict(i) for i in raw["instructions"]),
            targets=targets,
            ego_future=_read(blob, arrays["ego_future"]),
            agent_futures=_read(blob, arrays["agent_futures"]),
            future_valid=_read(blob, arrays["future_valid"]).astype(bool),
            scenario_id=raw["scenario_id"],
            archetype=raw["archetype"],
            t=raw["t"],
            split=raw["split"],
        ))
    return samples
