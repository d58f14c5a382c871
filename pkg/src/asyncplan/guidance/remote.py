"""HTTP client for an external guidance service (a real LLM deployment).

POSTs scene summaries and instructions to `/v1/guidance`; the response feature
(guidance-width) passes through the local feature adapter. Failures fall back
to the cached feature and flag degraded mode; the planner is never blocked
beyond the timeout.
"""

from __future__ import annotations

import os
from typing import Optional, Sequence

import httpx
import numpy as np

from ..datagen.instructions import RoutingInstruction
from ..planner.types import InstructionFeature
from ..scene.types import VectorScene
from .model import FeatureAdapter

ENV_URL = "ASYNCPLAN_GUIDANCE_URL"
ENV_TIMEOUT = "ASYNCPLAN_GUIDANCE_TIMEOUT_MS"
DEFAULT_TIMEOUT_MS = 250.0


class GuidanceProtocolError(RuntimeError):
    pass


def scene_summary(scene: VectorScene) -> dict:
    ego = scene.current_ego
    return {
        "ego": {"speed": ego.speed, "ax": ego.ax, "ay": ego.ay},
        "agents": [
            {
                "id": t.id, "kind": t.kind,
                "x": float(t.current[0]), "y": float(t.current[1]),
                "speed": float(t.current[3]),
            }
            for t in scene.agents if t.valid[-1]
        ],
        "lanes_digest": [
            {"id": lane.id, "light": lane.traffic_light,
             "on_route": lane.id in scene.route_lane_ids,
             "length": round(lane.length, 1)}
            for lane in scene.lanes
        ],
    }


class RemoteGuidanceClient:
    """Synchronous remote guidance with hard timeout and cached fallback."""

    def __init__(self, adapter: FeatureAdapter, endpoint: Optional[str] = None,
                 timeout_ms: Optional[float] = None, session: str = "default"):
        self.adapter = adapter
        self.endpoint = endpoint or os.environ.get(ENV_URL, "")
        if not self.endpoint:
            raise ValueError(f"no guidance endpoint configured ({ENV_URL})")
        raw_timeout = timeout_ms if timeout_ms is not None else float(
            os.environ.get(ENV_TIMEOUT, DEFAULT_TIMEOUT_MS))
        self.timeout_ms = raw_timeout
        self.session = session
        self.expected_dim = adapter.linear.weight.shape[0]
        self._cached: Optional[InstructionFeature] = None
        self.degraded = False

    def __call__(self, scene: VectorScene,
                 instructions: Sequence[RoutingInstruction]) -> InstructionFeature:
        payload = {
            "session": self.session,
            "instructions": [i.to_dict() for i in instructions],
            "scene": scene_summary(scene),
        }
        try:
            response = httpx.post(f"{self.endpoint.rstrip('/')}/v1/guidance",
                                  json=payload, timeout=self.timeout_ms / 1e3)
            response.raise_for_status()
            body = response.json()
            raw = np.asarray(body.get("feature", []), dtype=np.float64)
            if raw.shape != (self.expected_dim,) or not np.all(np.isfinite(raw)):
                raise GuidanceProtocolError(
                    f"feature must be finite with shape ({self.expected_dim},), "
                    f"got {raw.shape}")
        except GuidanceProtocolError:
            return self._fallback()
        except (httpx.HTTPError, ValueError):
            return self._fallback()
        from ..nn.tensor import Tensor
        feature = self.adapter.to_feature(Tensor(raw.reshape(1, -1)), source="remote")
        self._cached = feature
        self.degraded = False
        return feature

    def _fallback(self) -> InstructionFeature:
        self.degraded = True
        if self._cached is not None:
            return self._cached
        d_out = self.adapter.linear.weight.shape[1]
        return InstructionFeature(vector=np.zeros(d_out), age=0, source="remote")
