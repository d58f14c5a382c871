"""Batch closed-loop evaluation and report aggregation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from ..metrics import MetricReport, compute_report
from ..scene.types import Scenario
from ..sim.engine import RolloutLog, Simulation, SimulationAborted
from .schedule import ScheduleConfig

ZERO_REPORT = dict(drivable=0.0, direction=0.0, comfort=0.0, progress=0.0,
                   collisions=0.0, speed_limit=0.0, ttc=0.0, making_progress=0.0)


@dataclass
class ScenarioResult:
    scenario_id: str
    archetype: str
    report: MetricReport
    diagnostic: Optional[str] = None
    planner_ms_mean: float = 0.0
    planner_ms_max: float = 0.0
    guidance_ms_mean: float = 0.0
    steps: int = 0


@dataclass
class EvalReport:
    results: list[ScenarioResult] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def overall_mean(self) -> float:
        return float(np.mean([r.report.score for r in self.results])) if self.results else 0.0

    def per_type_means(self) -> dict[str, float]:
        by_type: dict[str, list[float]] = {}
        for r in self.results:
            by_type.setdefault(r.archetype, []).append(r.report.score)
        return {k: float(np.mean(v)) for k, v in sorted(by_type.items())}

    def submetric_means(self) -> dict[str, float]:
        if not self.results:
            return {}
        keys = ("drivable", "direction", "comfort", "progress", "collisions",
                "speed_limit", "ttc", "making_progress")
        return {k: float(np.mean([getattr(r.report, k) for r in self.results])) for k in keys}

    def timing_summary(self) -> dict[str, float]:
        if not self.results:
            return {}
        steps = sum(r.steps for r in self.results)
        return {
            "planner_ms_mean": float(np.mean([r.planner_ms_mean for r in self.results])),
            "planner_ms_max": float(np.max([r.planner_ms_max for r in self.results])),
            "guidance_ms_mean": float(np.mean([r.guidance_ms_mean for r in self.results])),
            "total_steps": steps,
        }

    def to_dict(self, include_timings: bool = True) -> dict:
        doc = {
            "config": self.config,
            "overall_mean": self.overall_mean,
            "per_type": self.per_type_means(),
            "submetrics": self.submetric_means(),
            "scenarios": [
                {"id": r.scenario_id, "archetype": r.archetype,
                 "report": r.report.to_dict(), "diagnostic": r.diagnostic}
                for r in self.results
            ],
        }
        if include_timings:
            doc["timings"] = self.timing_summary()
        return doc

    def canonical_json(self) -> bytes:
        """Deterministic serialization without wall-clock timings."""
        return json.dumps(self.to_dict(include_timings=False), sort_keys=True).encode()

    def table(self) -> str:
        """Aligned text table: rows are planners, columns scenario types."""
        per_type = self.per_type_means()
        planner = self.config.get("planner", "planner")
        header = f"{'planner':<16}" + "".join(f"{t:>22}" for t in per_type) + f"{'mean':>10}"
        row = f"{planner:<16}" + "".join(f"{v:>22.2f}" for v in per_type.values())
        row += f"{self.overall_mean:>10.2f}"
        return header + "\n" + row


def run_eval(
    scenarios: Sequence[Scenario],
    planner_factory: Callable[[], object],
    guidance_factory: Optional[Callable[[], object]] = None,
    schedule: Optional[ScheduleConfig] = None,
    tracker_mode: str = "replay",
    keep_logs: bool = False,
) -> tuple[EvalReport, list[RolloutLog]]:
    """Run every scenario closed-loop and aggregate metric reports.

    Per-scenario failures score 0 with a diagnostic; the run continues.
    Factories give each scenario a fresh planner/guidance where needed (the
    learned ones are stateless snapshots, so a shared instance is fine too).
    """
    schedule = schedule or ScheduleConfig()
    report = EvalReport(config={
        "planner": getattr(planner_factory(), "name", "planner"),
        "interval_k": schedule.interval_k,
        "mode": schedule.mode,
        "tracker": tracker_mode,
        "n_scenarios": len(scenarios),
    })
    logs: list[RolloutLog] = []
    for scenario in scenarios:
        planner = planner_factory()
        guidance = guidance_factory() if guidance_factory is not None else None
        sim = Simulation(scenario, planner, guidance=guidance, schedule=schedule,
                         tracker_mode=tracker_mode)
        diagnostic = None
        try:
            log = sim.run()
            metric_report = compute_report(log, scenario)
        except SimulationAborted as exc:
            log = exc.log
            diagnostic = str(exc)
            metric_report = MetricReport(**ZERO_REPORT)
        finally:
            sim.close()
        timings = [r.planner_ms for r in log.records] or [0.0]
        gtimings = [r.guidance_ms for r in log.records] or [0.0]
        report.results.append(ScenarioResult(
            scenario_id=scenario.id,
            archetype=scenario.archetype,
            report=metric_report,
            diagnostic=diagnostic,
            planner_ms_mean=float(np.mean(timings)),
            planner_ms_max=float(np.max(timings)),
            guidance_ms_mean=float(np.mean(gtimings)),
            steps=len(log.records),
        ))
        if keep_logs:
            logs.append(log)
    return report, logs


def write_report(report: EvalReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True))
    return path
