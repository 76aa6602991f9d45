"""Record types flowing through the data pipeline, with line-record codecs.

Field names on the wire match the structured samples the models consume:
task records use ``task_id``/``task``/``plan``; training records use
``thought``/``control_label``/``control_name``/``function``/``args``/
``status``/``plan``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from ..env_sim import ActionCall, CanvasDiffEntry, ExecutionResult

__all__ = [
    "SOURCES",
    "TaskPlanRecord",
    "EvolutionConfig",
    "InstantiatedTask",
    "TrajectoryStep",
    "Trajectory",
    "EvaluationVerdict",
    "TrainingRecord",
]

SOURCES = ("doc", "wikihow", "query", "evolved")


@dataclass(frozen=True)
class TaskPlanRecord:
    task_id: str
    task: str
    plan: tuple[str, ...]
    source: str
    origin_task_id: str | None = None

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if not self.task or not self.plan or not self.task_id:
            raise ValueError("task_id, task and plan must be non-empty")

    def to_dict(self) -> dict:
        out = {
            "task_id": self.task_id,
            "task": self.task,
            "plan": list(self.plan),
            "source": self.source,
        }
        if self.origin_task_id is not None:
            out["origin_task_id"] = self.origin_task_id
        return out

    @classmethod
    def from_dict(cls, obj: Mapping) -> "TaskPlanRecord":
        return cls(
            task_id=obj["task_id"],
            task=obj["task"],
            plan=tuple(obj["plan"]),
            source=obj["source"],
            origin_task_id=obj.get("origin_task_id"),
        )


@dataclass(frozen=True)
class EvolutionConfig:
    max_extra_words: int = 20
    target_multiplier: float = 1.5
    max_retries: int = 2

    def __post_init__(self) -> None:
        if self.max_extra_words <= 0:
            raise ValueError("max_extra_words must be positive")


@dataclass(frozen=True)
class InstantiatedTask:
    origin_task_id: str
    instantiated_task: str
    template_id: str
    actions: tuple[ActionCall, ...]
    thought: str = ""

    def to_dict(self) -> dict:
        return {
            "origin_task_id": self.origin_task_id,
            "instantiated_task": self.instantiated_task,
            "template_id": self.template_id,
            "thought": self.thought,
            "actions": [a.to_call_dict() for a in self.actions],
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "InstantiatedTask":
        return cls(
            origin_task_id=obj["origin_task_id"],
            instantiated_task=obj["instantiated_task"],
            template_id=obj["template_id"],
            thought=obj.get("thought", ""),
            actions=tuple(ActionCall.from_call_dict(a) for a in obj["actions"]),
        )


@dataclass(frozen=True)
class TrajectoryStep:
    step_no: int
    action: ActionCall
    result: ExecutionResult
    controls: tuple[dict, ...]  # enabled controls before the action
    pre_digest: str
    post_digest: str

    def to_dict(self) -> dict:
        action = self.action.to_call_dict()
        action["status"] = self.action.status
        return {
            "step_no": self.step_no,
            "action": action,
            "result": self.result.to_dict(),
            "controls": [dict(c) for c in self.controls],
            "pre_digest": self.pre_digest,
            "post_digest": self.post_digest,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "TrajectoryStep":
        return cls(
            step_no=obj["step_no"],
            action=ActionCall.from_call_dict(obj["action"]),
            result=ExecutionResult.from_dict(obj["result"]),
            controls=tuple(obj["controls"]),
            pre_digest=obj["pre_digest"],
            post_digest=obj["post_digest"],
        )


FINAL_STATUSES = ("success", "exec_error", "discarded")


@dataclass(frozen=True)
class Trajectory:
    trajectory_id: str
    origin: InstantiatedTask
    steps: tuple[TrajectoryStep, ...]
    final_status: str
    canvas_diff: tuple[CanvasDiffEntry, ...]
    initial_canvas: str
    final_canvas: str
    init_control_state: dict
    final_control_state: dict
    init_rendered: str
    final_rendered: str

    def __post_init__(self) -> None:
        if self.final_status not in FINAL_STATUSES:
            raise ValueError(f"bad final_status {self.final_status!r}")
        for i, step in enumerate(self.steps, 1):
            if step.step_no != i:
                raise ValueError("step_no must increase strictly from 1")
        if self.final_status == "exec_error" and self.steps and self.steps[-1].result.ok:
            raise ValueError("exec_error trajectory must end at the failing step")

    def to_dict(self) -> dict:
        return {
            "trajectory_id": self.trajectory_id,
            "origin": self.origin.to_dict(),
            "steps": [s.to_dict() for s in self.steps],
            "final_status": self.final_status,
            "canvas_diff": [e.to_dict() for e in self.canvas_diff],
            "initial_canvas": self.initial_canvas,
            "final_canvas": self.final_canvas,
            "init_control_state": self.init_control_state,
            "final_control_state": self.final_control_state,
            "init_rendered": self.init_rendered,
            "final_rendered": self.final_rendered,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "Trajectory":
        return cls(
            trajectory_id=obj["trajectory_id"],
            origin=InstantiatedTask.from_dict(obj["origin"]),
            steps=tuple(TrajectoryStep.from_dict(s) for s in obj["steps"]),
            final_status=obj["final_status"],
            canvas_diff=tuple(CanvasDiffEntry.from_dict(e) for e in obj["canvas_diff"]),
            initial_canvas=obj["initial_canvas"],
            final_canvas=obj["final_canvas"],
            init_control_state=obj["init_control_state"],
            final_control_state=obj["final_control_state"],
            init_rendered=obj["init_rendered"],
            final_rendered=obj["final_rendered"],
        )


@dataclass(frozen=True)
class EvaluationVerdict:
    task_complete: str
    task_quality: str
    complete_judgement: str
    quality_judgement: str

    def __post_init__(self) -> None:
        if self.task_complete not in ("yes", "no", "unsure"):
            raise ValueError(f"bad task_complete {self.task_complete!r}")
        if self.task_quality not in ("ambiguous", "over-detailed", "good"):
            raise ValueError(f"bad task_quality {self.task_quality!r}")

    def to_dict(self) -> dict:
        return {
            "task_complete": self.task_complete,
            "task_quality": self.task_quality,
            "complete_judgement": self.complete_judgement,
            "quality_judgement": self.quality_judgement,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "EvaluationVerdict":
        return cls(
            task_complete=obj["task_complete"],
            task_quality=obj["task_quality"],
            complete_judgement=obj["complete_judgement"],
            quality_judgement=obj["quality_judgement"],
        )


@dataclass(frozen=True)
class TrainingRecord:
    record_id: str
    origin_task_id: str
    trajectory_id: str
    step_no: int
    input: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "origin_task_id": self.origin_task_id,
            "trajectory_id": self.trajectory_id,
            "step_no": self.step_no,
            "input": self.input,
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "TrainingRecord":
        return cls(
            record_id=obj["record_id"],
            origin_task_id=obj["origin_task_id"],
            trajectory_id=obj["trajectory_id"],
            step_no=obj["step_no"],
            input=dict(obj["input"]),
            output=dict(obj["output"]),
        )
