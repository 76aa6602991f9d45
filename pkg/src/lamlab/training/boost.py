"""Self-boosting exploration: retry failed tasks with the current policy.

Each failed task gets a bounded number of sampled attempts through the agent
loop; only judge-verified successes come back, in the same trajectory schema
the data pipeline produces, so they merge straight into the training corpus.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

from .. import agent as agent_mod
from ..dataflow.records import EvaluationVerdict, Trajectory
from ..policy.model import ModelParams
from ..textutil import stable_hash
from .configs import BoostConfig

__all__ = ["FailedTask", "self_boost"]


@dataclass(frozen=True)
class FailedTask:
    task_id: str
    template_id: str
    task: str


def self_boost(
    params: ModelParams,
    failed_tasks: Sequence[FailedTask],
    judge: Callable[[Trajectory], EvaluationVerdict],
    config: BoostConfig = BoostConfig(),
    bundle_dir: str | Path | None = None,
) -> list[Trajectory]:
    """New judge-verified success trajectories; possibly empty."""
    successes: list[Trajectory] = []
    for task in sorted(failed_tasks, key=lambda t: t.task_id):
        for attempt in range(config.attempts_per_task):
            seed = stable_hash(task.task_id, attempt, config.base_seed)
            policy = agent_mod.ModelPolicy(params=params, mode="sample", seed=seed)
            record = agent_mod.run_task(
                policy,
                task.template_id,
                task.task,
                config=agent_mod.AgentConfig(max_steps=config.max_steps, mode="sample", seed=seed),
                task_id=task.task_id,
                bundle_dir=bundle_dir,
            )
            if record.trajectory.final_status != "success":
                continue
            trajectory = replace(
                record.trajectory, trajectory_id=f"boost_{task.task_id}_a{attempt}"
            )
            verdict = judge(trajectory)
            if verdict.task_complete == "yes":
                successes.append(trajectory)
                break
    return successes
