"""Offline plan metrics, offline decision metrics, online run metrics, and
deterministic report rendering.

Plan matching defaults to greedy one-to-one matching on normalized text; an
oracle-backed matcher builds the plan-comparison prompt and trusts its
structured verdict instead. Action metrics compare predicted steps
positionally against ground truth. All fractions are micro-averaged.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .agent import RunRecord
from .errors import MissingGroundTruth, OracleFailure
from .goals import goal_satisfied
from .oracle import OracleRequest, Provider
from .textutil import normalize_line

__all__ = [
    "GroundTruthStep",
    "PredictedStep",
    "PlanEvalResult",
    "ActionEvalResult",
    "OnlineEvalResult",
    "match_plan_steps",
    "oracle_matcher",
    "oracle_plan_judge",
    "eval_plans",
    "eval_actions",
    "eval_online",
    "canvas_predicate_judge",
    "report_plans",
    "report_actions",
    "report_online",
    "render_table",
    "write_reports",
]

SOLVED_RECALL_THRESHOLD = 0.8


@dataclass(frozen=True)
class GroundTruthStep:
    """One reference step. acceptable_objects is empty only for target-free
    operations, in which case the predicted control text must be empty too."""

    acceptable_objects: tuple[str, ...]
    operation: str
    status: str

    @classmethod
    def from_dict(cls, obj: Mapping) -> "GroundTruthStep":
        return cls(
            acceptable_objects=tuple(obj.get("acceptable_objects", ())),
            operation=obj["operation"],
            status=obj["status"],
        )

    def to_dict(self) -> dict:
        return {
            "acceptable_objects": list(self.acceptable_objects),
            "operation": self.operation,
            "status": self.status,
        }


@dataclass(frozen=True)
class PredictedStep:
    control_text: str
    function: str
    status: str

    @classmethod
    def from_dict(cls, obj: Mapping) -> "PredictedStep":
        return cls(
            control_text=obj.get("control_text", ""),
            function=obj.get("function", ""),
            status=obj.get("status", ""),
        )

    def to_dict(self) -> dict:
        return {
            "control_text": self.control_text,
            "function": self.function,
            "status": self.status,
        }


@dataclass(frozen=True)
class PlanEvalResult:
    tsr: float
    step_precision: float
    step_recall: float
    matched_pairs: tuple[str, ...] = ()


@dataclass(frozen=True)
class ActionEvalResult:
    object_acc: float
    operation_acc: float
    status_acc: float
    ssr: float
    tsr: float
    per_task: dict[str, bool] = field(default_factory=dict)


@dataclass(frozen=True)
class OnlineEvalResult:
    tsr: float
    mean_completion_time: float
    mean_steps: float
    mean_step_latency: float


Matcher = Callable[[Sequence[str], Sequence[str]], list[tuple[str, str]]]


def match_plan_steps(
    pred: Sequence[str], truth: Sequence[str], matcher: Matcher | None = None
) -> list[tuple[str, str]]:
    """Greedy one-to-one matching: each predicted step pairs with the first
    still-unmatched truth step of equal normalized text."""
    if matcher is not None:
        return matcher(pred, truth)
    pairs = []
    used: set[int] = set()
    for p in pred:
        norm = normalize_line(p)
        for j, t in enumerate(truth):
            if j in used:
                continue
            if normalize_line(t) == norm:
                used.add(j)
                pairs.append((p, t))
                break
    return pairs


def oracle_matcher(oracle: Provider, question: str = "") -> Matcher:
    """Matcher that delegates similarity to the plan-comparison oracle."""

    def match(pred: Sequence[str], truth: Sequence[str]) -> list[tuple[str, str]]:
        request = OracleRequest(
            template_id="plan_eval",
            substitutions={
                "question": question or "Complete the task with these steps.",
                "answer1": "\n".join(f"{i}. {s}" for i, s in enumerate(pred, 1)),
                "answer2": "\n".join(f"{i}. {s}" for i, s in enumerate(truth, 1)),
            },
        )
        try:
            response = oracle.complete(request)
        except Exception as exc:
            raise OracleFailure(f"plan matcher oracle failed: {exc}") from exc
        if response.parsed is None:
            raise OracleFailure(f"plan matcher response unparseable: {response.parse_error}")
        raw_pairs = response.parsed["Subtask3"].get("Similar action items", [])
        pairs = []
        for item in raw_pairs:
            left, sep, right = str(item).partition(" / ")
            pairs.append((left, right if sep else ""))
        return pairs

    return match


def oracle_plan_judge(oracle: Provider) -> Callable[[str, Sequence[str], Sequence[str]], bool]:
    """Task-solved judge backed by the plan-comparison oracle: the task counts
    as solved when the first answer is judged able to solve the question."""

    def judge(task: str, pred: Sequence[str], truth: Sequence[str]) -> bool:
        request = OracleRequest(
            template_id="plan_eval",
            substitutions={
                "question": task,
                "answer1": "\n".join(f"{i}. {s}" for i, s in enumerate(pred, 1)),
                "answer2": "\n".join(f"{i}. {s}" for i, s in enumerate(truth, 1)),
            },
        )
        try:
            response = oracle.complete(request)
        except Exception as exc:
            raise OracleFailure(f"plan judge oracle failed: {exc}") from exc
        if response.parsed is None:
            raise OracleFailure(f"plan judge response unparseable: {response.parse_error}")
        return str(response.parsed.get("Subtask1", "")).lower() == "yes"

    return judge


def eval_plans(
    pairs: Sequence[tuple[str, Sequence[str], Sequence[str]]],
    matcher: Matcher | None = None,
    judge: Callable[[str, Sequence[str], Sequence[str]], bool] | None = None,
) -> PlanEvalResult:
    """pairs: (task, predicted plan, ground-truth plan) triples.

    Precision/recall are micro-averaged over steps (empty prediction counts
    as precision 0). Task success defaults to per-task recall >= 0.8; a judge
    callable replaces that proxy when given.
    """
    if not pairs:
        raise ValueError("eval_plans needs at least one pair")
    total_matched = 0
    total_pred = 0
    total_truth = 0
    solved = 0
    all_pairs: list[str] = []
    for task, pred, truth in pairs:
        matched = match_plan_steps(pred, truth, matcher)
        all_pairs.extend(f"{p} / {t}" for p, t in matched)
        total_matched += len(matched)
        total_pred += len(pred)
        total_truth += len(truth)
        if judge is not None:
            solved += 1 if judge(task, pred, truth) else 0
        else:
            recall_i = len(matched) / len(truth) if truth else 0.0
            solved += 1 if recall_i >= SOLVED_RECALL_THRESHOLD else 0
    return PlanEvalResult(
        tsr=solved / len(pairs),
        step_precision=total_matched / total_pred if total_pred else 0.0,
        step_recall=total_matched / total_truth if total_truth else 0.0,
        matched_pairs=tuple(all_pairs),
    )


def _object_correct(pred: PredictedStep, truth: GroundTruthStep) -> bool:
    if not truth.acceptable_objects:
        return pred.control_text == ""
    return pred.control_text in truth.acceptable_objects


def eval_actions(
    preds: Mapping[str, Sequence[PredictedStep]],
    truths: Mapping[str, Sequence[GroundTruthStep]],
) -> ActionEvalResult:
    """Positional comparison per task id. Accuracies are micro-averaged over
    ground-truth steps; a task succeeds iff every step succeeds and the
    predicted step count matches the truth."""
    if not preds:
        raise ValueError("eval_actions needs at least one predicted task")
    object_hits = operation_hits = status_hits = step_hits = 0
    total_steps = 0
    per_task: dict[str, bool] = {}
    for task_id in sorted(preds):
        if task_id not in truths:
            raise MissingGroundTruth(f"no ground truth for task {task_id!r}")
        pred_steps = list(preds[task_id])
        truth_steps = list(truths[task_id])
        task_ok = len(pred_steps) == len(truth_steps)
        for i, truth in enumerate(truth_steps):
            total_steps += 1
            pred = pred_steps[i] if i < len(pred_steps) else None
            obj = pred is not None and _object_correct(pred, truth)
            op = pred is not None and pred.function == truth.operation
            st = pred is not None and pred.status == truth.status
            object_hits += obj
            operation_hits += op
            status_hits += st
            step_ok = obj and op and st
            step_hits += step_ok
            task_ok = task_ok and step_ok
        per_task[task_id] = task_ok
    return ActionEvalResult(
        object_acc=object_hits / total_steps if total_steps else 0.0,
        operation_acc=operation_hits / total_steps if total_steps else 0.0,
        status_acc=status_hits / total_steps if total_steps else 0.0,
        ssr=step_hits / total_steps if total_steps else 0.0,
        tsr=sum(per_task.values()) / len(per_task),
        per_task=per_task,
    )


def canvas_predicate_judge(run: RunRecord) -> bool:
    """Success iff the final canvas diff satisfies the task's keyword goal."""
    diff = [e.to_dict() for e in run.trajectory.canvas_diff]
    return goal_satisfied(run.task, diff) is True


def eval_online(
    runs: Sequence[RunRecord], judge: Callable[[RunRecord], bool] = canvas_predicate_judge
) -> OnlineEvalResult:
    if not runs:
        raise ValueError("eval_online needs at least one run")
    successes = sum(1 for run in runs if judge(run))
    total_time = sum(run.total_time for run in runs)
    total_steps = sum(len(run.trajectory.steps) for run in runs)
    return OnlineEvalResult(
        tsr=successes / len(runs),
        mean_completion_time=total_time / len(runs),
        mean_steps=total_steps / len(runs),
        mean_step_latency=total_time / total_steps if total_steps else 0.0,
    )


# --- reports --------------------------------------------------------------


def render_table(title: str, headers: list[str], rows: list[list[str]]) -> str:
    if not rows:
        return f"{title}\n(no data)\n"
    widths = [
        max(len(headers[i]), max(len(row[i]) for row in rows)) for i in range(len(headers))
    ]
    lines = [title]
    lines.append(" | ".join(h.ljust(widths[i]) for i, h in enumerate(headers)))
    lines.append("-+-".join("-" * w for w in widths))
    for row in rows:
        lines.append(" | ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines) + "\n"


def _csv_text(headers: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    writer.writerows(rows)
    return buf.getvalue()


def _pct(value: float) -> str:
    return f"{value * 100:.1f}"


def report_plans(results: Mapping[str, PlanEvalResult]) -> tuple[str, str]:
    headers = ["Model", "TSR (%)", "Step Precision (%)", "Step Recall (%)"]
    rows = [
        [name, _pct(r.tsr), _pct(r.step_precision), _pct(r.step_recall)]
        for name, r in sorted(results.items())
    ]
    return render_table("Planning performance", headers, rows), _csv_text(headers, rows)


def report_actions(results: Mapping[str, ActionEvalResult]) -> tuple[str, str]:
    metric_rows = [
        ("Object Acc (%)", lambda r: r.object_acc),
        ("Operation Acc (%)", lambda r: r.operation_acc),
        ("Status Acc (%)", lambda r: r.status_acc),
        ("Step Success Rate (SSR) (%)", lambda r: r.ssr),
        ("Task Success Rate (TSR) (%)", lambda r: r.tsr),
    ]
    names = sorted(results)
    headers = ["Metric"] + names
    rows = [
        [label] + [_pct(getter(results[name])) for name in names]
        for label, getter in metric_rows
    ]
    return render_table("Decision-making performance", headers, rows), _csv_text(headers, rows)


def report_online(results: Mapping[str, OnlineEvalResult]) -> tuple[str, str]:
    metric_rows = [
        ("Task Success Rate (%)", lambda r: _pct(r.tsr)),
        ("Task Completion Time (s)", lambda r: f"{r.mean_completion_time:.2f}"),
        ("Task Completion Steps", lambda r: f"{r.mean_steps:.2f}"),
        ("Average Step Latency (s)", lambda r: f"{r.mean_step_latency:.2f}"),
    ]
    names = sorted(results)
    headers = ["Metric"] + names
    rows = [[label] + [getter(results[name]) for name in names] for label, getter in metric_rows]
    return render_table("Online performance", headers, rows), _csv_text(headers, rows)


def write_reports(out_dir, sections: list[tuple[str, str]]) -> tuple[str, str]:
    """Concatenate (text, csv) sections and write report.txt / report.csv."""
    from pathlib import Path

    from .jsonl import write_text

    out = Path(out_dir)
    text = "\n".join(t for t, _ in sections)
    csv_text = "\n".join(c for _, c in sections)
    write_text(out / "report.txt", text)
    write_text(out / "report.csv", csv_text)
    return text, csv_text
