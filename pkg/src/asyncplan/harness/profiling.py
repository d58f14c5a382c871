"""Latency amortization profiling with busy-wait stubs.

Blocking-mode average step time follows c_p + c_g / k: the planner cost is
paid every step, the guidance cost every k-th step.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .schedule import should_invoke

FIG3_INTERVALS = (1, 9, 17, 29, 49, 79, 149)


def busy_wait(duration_ms: float) -> None:
    """Spin for the stated duration (sleep() is too coarse for tight stubs)."""
    deadline = time.perf_counter() + duration_ms / 1e3
    while time.perf_counter() < deadline:
        pass


@dataclass(frozen=True)
class ProfileRow:
    interval_k: int
    avg_step_ms: float
    invocations: int
    predicted_ms: float

    def to_dict(self) -> dict:
        return {"interval_k": self.interval_k, "avg_step_ms": self.avg_step_ms,
                "invocations": self.invocations, "predicted_ms": self.predicted_ms}


def profile_latency(
    planner_ms: float,
    guidance_ms: float,
    intervals: Sequence[int] = FIG3_INTERVALS,
    steps: int = 150,
) -> list[ProfileRow]:
    """Measured blocking average step time per interval, with the analytic
    c_p + c_g / k prediction attached."""
    rows = []
    for k in intervals:
        invocations = 0
        start = time.perf_counter()
        for step in range(steps):
            if should_invoke(step, k):
                busy_wait(guidance_ms)
                invocations += 1
            busy_wait(planner_ms)
        elapsed_ms = (time.perf_counter() - start) * 1e3
        rows.append(ProfileRow(
            interval_k=k,
            avg_step_ms=elapsed_ms / steps,
            invocations=invocations,
            predicted_ms=planner_ms + guidance_ms * invocations / steps,
        ))
    return rows


def format_profile_table(rows: Sequence[ProfileRow]) -> str:
    lines = [f"{'k':>5}  {'avg step ms':>12}  {'model c_p+c_g/k':>16}  {'invocations':>12}"]
    for r in rows:
        lines.append(f"{r.interval_k:>5}  {r.avg_step_ms:>12.2f}  "
                     f"{r.predicted_ms:>16.2f}  {r.invocations:>12}")
    return "\n".join(lines)


def write_profile(rows: Sequence[ProfileRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"rows": [r.to_dict() for r in rows]}, indent=1))
    return path
