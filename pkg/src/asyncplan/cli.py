"""Command-line interface: data generation, training, evaluation, serving."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .harness.config import AppConfig
from .scene.generate import ARCHETYPES


@click.group()
def main():
    """Closed-loop planning framework with asynchronously scheduled guidance."""


@main.command("gen-scenarios")
@click.option("--out", type=click.Path(), required=True)
@click.option("--seeds", type=int, default=10, help="seeds per archetype")
@click.option("--duration", type=float, default=20.0)
@click.option("--archetypes", type=str, default=",".join(ARCHETYPES))
def gen_scenarios(out, seeds, duration, archetypes):
    """Write scenario JSON files for each archetype x seed."""
    from .datagen.pipeline import write_scenarios

    names = tuple(archetypes.split(","))
    paths = write_scenarios(range(seeds), out, archetypes=names, duration=duration)
    click.echo(f"wrote {len(paths)} scenarios to {out}")


@main.command("gen-data")
@click.option("--out", type=click.Path(), required=True)
@click.option("--seeds", type=int, default=50, help="seeds per archetype")
@click.option("--duration", type=float, default=36.0)
@click.option("--val-fraction", type=float, default=0.2)
def gen_data(out, seeds, duration, val_fraction):
    """Collect expert rollouts and write the fine-tune dataset."""
    from .datagen.pipeline import build_dataset
    from .datagen.store import save_dataset

    samples = build_dataset(range(seeds), duration=duration, val_fraction=val_fraction)
    save_dataset(samples, out)
    n_val = sum(1 for s in samples if s.split == "val")
    click.echo(f"wrote {len(samples)} samples ({n_val} val) to {out}")


@main.command("gen-qa")
@click.option("--out", type=click.Path(), required=True)
@click.option("--seeds", type=int, default=10, help="seeds per archetype")
@click.option("--duration", type=float, default=30.0)
def gen_qa(out, seeds, duration):
    """Render the rule-based planning QA corpus."""
    from .datagen.pipeline import expert_rollout, stop_time_for
    from .datagen.qa import QA_TYPES, gen_planning_qa, qa_frames, write_qa_corpus
    from .scene.generate import generate_scenario

    records = []
    for archetype in ARCHETYPES:
        for seed in range(seeds):
            scenario = generate_scenario(archetype, seed, duration=duration)
            log = expert_rollout(scenario, stop_time_for(scenario))
            for frame in qa_frames(log):
                for qtype in QA_TYPES:
                    records.append(gen_planning_qa(log, frame, qtype))
    write_qa_corpus(records, out)
    click.echo(f"wrote {len(records)} QA records to {out}")


@main.command("train")
@click.option("--stage", type=click.Choice(["a", "b"]), required=True)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--base", type=click.Path(), default=None, help="stage-A checkpoint (stage b)")
@click.option("--epochs", type=int, default=None)
@click.option("--batch", type=int, default=16)
@click.option("--lr", type=float, default=None)
@click.option("--seed", type=int, default=0)
def train(stage, data, out, base, epochs, batch, lr, seed):
    """Train the base planner (stage a) or the joint guided model (stage b)."""
    from .datagen.store import load_dataset
    from .guidance.train import TrainConfig, train_stage_a, train_stage_b

    samples = load_dataset(data)
    if stage == "a":
        config = TrainConfig(epochs=epochs or 12, batch_size=batch,
                             lr=lr or 3e-4, seed=seed)
        _, path = train_stage_a(samples, out, config)
    else:
        base = base or str(Path(out) / "stage_a")
        config = TrainConfig(epochs=epochs or 30, batch_size=batch,
                             lr=lr or 5e-4, seed=seed)
        _, path = train_stage_b(samples, base, out, config)
    click.echo(f"stage {stage} checkpoint at {path}")


@main.command("eval")
@click.option("--scenarios", type=click.Path(exists=True), default=None,
              help="directory of scenario JSON files")
@click.option("--planner", type=click.Choice(["idm", "learned", "learned_scored"]),
              default="idm")
@click.option("--checkpoint", type=click.Path(exists=True), default=None,
              help="stage-B joint checkpoint for learned planners")
@click.option("--interval", "interval_k", type=int, default=1)
@click.option("--scorer", is_flag=True, help="route the ego trajectory through the proposal scorer")
@click.option("--seeds", type=int, default=5, help="seeds per archetype when no directory given")
@click.option("--duration", type=float, default=15.0)
@click.option("--out", type=click.Path(), default=None)
def eval_cmd(scenarios, planner, checkpoint, interval_k, scorer, seeds, duration, out):
    """Closed-loop evaluation with the full metric suite."""
    from .harness.evalrun import run_eval, write_report
    from .harness.schedule import ScheduleConfig
    from .scene.generate import generate_scenario
    from .scene.serialize import load_scenario
    from .sim.planners import IdmPlanner

    if scenarios:
        pool = [load_scenario(p.read_bytes()) for p in sorted(Path(scenarios).glob("*.json"))]
    else:
        pool = [generate_scenario(a, s, duration=duration)
                for a in ARCHETYPES for s in range(seeds)]

    if planner == "idm":
        planner_factory = lambda: IdmPlanner()
        guidance_factory = None
    else:
        if not checkpoint:
            raise click.UsageError("learned planners need --checkpoint")
        from .guidance.runtime import LearnedGuidance
        from .guidance.train import load_joint
        from .planner.runtime import LearnedPlanner
        joint = load_joint(checkpoint)
        use_scorer = scorer or planner == "learned_scored"
        planner_factory = lambda: LearnedPlanner(joint.planner, use_scorer=use_scorer)
        guidance_factory = lambda: LearnedGuidance(joint.planner, joint.guidance, joint.adapter)

    report, _ = run_eval(pool, planner_factory, guidance_factory,
                         schedule=ScheduleConfig(interval_k=interval_k))
    click.echo(report.table())
    click.echo(f"overall mean score: {report.overall_mean:.2f}")
    if out:
        write_report(report, out)
        click.echo(f"report written to {out}")


@main.command("profile")
@click.option("--cp", type=float, required=True, help="planner stub cost, ms")
@click.option("--cg", type=float, required=True, help="guidance stub cost, ms")
@click.option("--steps", type=int, default=150)
@click.option("--out", type=click.Path(), default=None)
def profile(cp, cg, steps, out):
    """Measure blocking-mode step-time amortization across intervals."""
    from .harness.profiling import format_profile_table, profile_latency, write_profile

    rows = profile_latency(cp, cg, steps=steps)
    click.echo(format_profile_table(rows))
    if out:
        write_profile(rows, out)
        click.echo(f"profile written to {out}")


@main.command("select-hard")
@click.option("--scores", type=click.Path(exists=True), required=True,
              help="eval report JSON or {id: [type, score]} map")
@click.option("--n", type=int, default=20)
def select_hard(scores, n):
    """Keep the n lowest-scoring scenarios per type."""
    from .metrics import select_hard_subset

    raw = json.loads(Path(scores).read_text())
    if "scenarios" in raw:
        table = {r["id"]: (r["archetype"], r["report"]["score"]) for r in raw["scenarios"]}
    else:
        table = {k: (v[0], float(v[1])) for k, v in raw.items()}
    for sid in select_hard_subset(table, n):
        click.echo(sid)


@main.command("serve")
@click.option("--port", type=int, default=None)
@click.option("--host", type=str, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--checkpoint", type=click.Path(exists=True), default=None)
@click.option("--scenario-dir", type=click.Path(exists=True), default=None)
def serve_cmd(port, host, config_path, checkpoint, scenario_dir):
    """Run the HTTP/WebSocket session service (UI at /ui when built)."""
    from .harness.service import serve

    config = AppConfig.load(config_path)
    if port is not None:
        config.port = port
    if host is not None:
        config.host = host
    if checkpoint is not None:
        config.checkpoint = checkpoint
    if scenario_dir is not None:
        config.scenario_dir = scenario_dir
    click.echo(f"serving on http://{config.host}:{config.port} (UI at /ui)")
    serve(config)


if __name__ == "__main__":
    main()
