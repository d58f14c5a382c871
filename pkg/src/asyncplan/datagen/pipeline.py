"""Dataset pipeline: expert rollouts -> fine-tune frames -> stored dataset.

The rule-based expert drives every scenario. A fraction of cruising rollouts
receive a Stop override at a random time so the corpus contains stopping
behavior that the vector scene alone does not explain (the desk-scale analog
of logged stops for pickups/drop-offs), keeping instructions informative.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..scene.generate import ARCHETYPES, generate_scenario
from ..scene.types import Scenario
from ..sim.engine import RolloutLog, Simulation
from ..sim.planners import IdmPlanner
from .frames import FinetuneSample, assign_splits, extract_finetune_frames
from .instructions import Command, RoutingInstruction

STOP_INJECTION_ARCHETYPES = ("straight_with_lead", "lane_change")
STOP_INJECTION_FRACTION = 0.25
STOP_WINDOW_S = (6.0, 14.0)


# perturb-and-recover noise for data collection: the expert replans from each
# perturbed state, so the recorded futures are corrective
CONTROL_NOISE = (0.35, 0.03)


def expert_rollout(scenario: Scenario, stop_time: Optional[float] = None,
                   control_noise: Optional[tuple[float, float]] = CONTROL_NOISE) -> RolloutLog:
    """IDM-expert rollout, optionally with a Stop override injected mid-run."""
    sim = Simulation(scenario, IdmPlanner(), control_noise=control_noise)
    injected = False
    while not sim.finished:
        if stop_time is not None and not injected and sim.state.clock >= stop_time:
            sim.inject_instruction(RoutingInstruction(Command.STOP))
            injected = True
        sim.step()
    return sim.log


def stop_time_for(scenario: Scenario, fraction: float = STOP_INJECTION_FRACTION) -> Optional[float]:
    if scenario.archetype not in STOP_INJECTION_ARCHETYPES:
        return None
    rng = np.random.default_rng((scenario.seed, 0x570B))
    if rng.random() >= fraction:
        return None
    return float(rng.uniform(*STOP_WINDOW_S))


def build_dataset(
    seeds: Sequence[int],
    archetypes: Sequence[str] = ARCHETYPES,
    duration: float = 36.0,
    val_fraction: float = 0.2,
    split_seed: int = 0,
) -> list[FinetuneSample]:
    """Fine-tune samples for archetypes x seeds, split-tagged and stratified."""
    samples: list[FinetuneSample] = []
    for archetype in archetypes:
        for seed in seeds:
            scenario = generate_scenario(archetype, seed, duration=duration)
            log = expert_rollout(scenario, stop_time_for(scenario))
            got, _skipped = extract_finetune_frames(log, scenario, include_start=True)
            samples.extend(got)
    return assign_splits(samples, val_fraction=val_fraction, seed=split_seed)


def write_scenarios(seeds: Sequence[int], out_dir: str | Path,
                    archetypes: Sequence[str] = ARCHETYPES,
                    duration: float = 36.0) -> list[Path]:
    from ..scene.serialize import save_scenario

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for archetype in archetypes:
        for seed in seeds:
            scenario = generate_scenario(archetype, seed, duration=duration)
            path = out / f"{scenario.id}.json"
            path.write_bytes(save_scenario(scenario))
            paths.append(path)
    return paths
