"""Task evolution: grow the corpus with harder variants of existing tasks.

The oracle rewrites a task; hard validators then enforce the contract no
matter what the oracle said: bounded extra words, topical overlap with the
original, and a non-empty plan. A variant that keeps failing validation is
rejected after a bounded number of retries.
"""

from __future__ import annotations

import json
import math
import sys
from typing import Sequence

from ..errors import OracleFailure, ValidationFailure
from ..oracle import OracleRequest, Provider
from ..textutil import content_tokens, word_count
from .records import EvolutionConfig, TaskPlanRecord

__all__ = ["evolve_task", "evolve_corpus", "validate_evolution"]


def validate_evolution(
    original: TaskPlanRecord, evolved_task: str, evolved_plan: Sequence[str], config: EvolutionConfig
) -> str | None:
    """Returns a violation description, or None when the evolution is valid."""
    extra = word_count(evolved_task) - word_count(original.task)
    if extra > config.max_extra_words:
        return f"evolved task adds {extra} words (limit {config.max_extra_words})"
    if not content_tokens(original.task) & content_tokens(evolved_task):
        return "evolved task shares no content keyword with the original"
    if not evolved_plan or not all(isinstance(s, str) and s.strip() for s in evolved_plan):
        return "evolved plan must be a non-empty list of steps"
    return None


def evolve_task(
    record: TaskPlanRecord,
    oracle: Provider,
    config: EvolutionConfig = EvolutionConfig(),
    variant: int = 0,
) -> TaskPlanRecord:
    last_violation = "no attempt made"
    for attempt in range(config.max_retries + 1):
        request = OracleRequest(
            template_id="evolve",
            substitutions={
                "task": record.task,
                "plan": json.dumps(list(record.plan), ensure_ascii=False),
                "max_extra_words": str(config.max_extra_words),
                # Salt the variant on retry so the oracle produces a new rewrite.
                "variant": str(variant + attempt * 1000),
            },
        )
        try:
            response = oracle.complete(request)
        except Exception as exc:  # provider-level failure (timeout, transport)
            raise OracleFailure(f"evolve oracle failed for {record.task_id}: {exc}") from exc
        if response.parsed is None:
            last_violation = response.parse_error or "unparseable response"
            continue
        evolved_task = str(response.parsed.get("evolved_task", "")).strip()
        evolved_plan = response.parsed.get("evolved_plan", [])
        if not isinstance(evolved_plan, list):
            last_violation = "evolved_plan is not a list"
            continue
        violation = validate_evolution(record, evolved_task, evolved_plan, config)
        if violation is None:
            return TaskPlanRecord(
                task_id=f"{record.task_id}_evo{variant + 1}",
                task=evolved_task,
                plan=tuple(str(s).strip() for s in evolved_plan),
                source="evolved",
                origin_task_id=record.task_id,
            )
        last_violation = violation
    raise ValidationFailure(f"evolution of {record.task_id} rejected: {last_violation}")


def evolve_corpus(
    records: Sequence[TaskPlanRecord],
    oracle: Provider,
    config: EvolutionConfig = EvolutionConfig(),
) -> list[TaskPlanRecord]:
    """Originals plus evolved variants, targeting +target_multiplier x records."""
    originals = [r for r in records if r.source != "evolved"]
    if not originals:
        return sorted(records, key=lambda r: r.task_id)
    target_extra = math.ceil(len(originals) * config.target_multiplier)
    evolved: list[TaskPlanRecord] = []
    variant = 0
    while len(evolved) < target_extra and variant < target_extra * 3:
        record = originals[variant % len(originals)]
        try:
            evolved.append(evolve_task(record, oracle, config, variant=variant // len(originals)))
        except ValidationFailure as exc:
            print(f"evolve: skipped one variant: {exc}", file=sys.stderr)
        variant += 1
    out = list(records) + evolved
    out.sort(key=lambda r: r.task_id)
    return out
