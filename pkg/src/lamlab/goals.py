"""Keyword-driven task goal checking.

One shared rule table decides whether a canvas change satisfies a task's
stated intent. It backs both the deterministic mock judge (trajectory
verdicts) and the online run judge (final-canvas predicates), so offline and
online success criteria cannot drift apart.
"""

from __future__ import annotations

import re

from .textutil import COLOR_HEX, first_int, first_quoted, table_dims, tokens, word_count

__all__ = ["goal_requirements", "goal_satisfied", "judge_task_quality"]

_AMBIGUOUS_RE = re.compile(r"\bselect(s|ed|ion|ing)?\b", re.IGNORECASE)


def goal_requirements(task: str) -> list[str]:
    """Requirement names triggered by the task text, in a fixed order."""
    low = task.lower()
    toks = set(tokens(task))
    reqs = []
    if "highlight" in low:
        reqs.append("highlight")
    if "bold" in toks:
        reqs.append("bold")
    if "font size" in low or ("size" in toks and first_int(task) is not None):
        reqs.append("font_size")
    if "color" in toks and "highlight" not in low:
        reqs.append("font_color")
    if "table" in toks:
        reqs.append("table")
    if "border" in toks or "borders" in toks:
        reqs.append("border")
    if "type" in toks or "write" in toks or "append" in toks:
        reqs.append("typed_text")
    if "comment" in toks or "comments" in toks:
        reqs.append("comment")
    return reqs


def _run_text_paths(diff_entries: list[dict]) -> list[dict]:
    return [
        e
        for e in diff_entries
        if ".runs[" in e["path"] and e["path"].endswith(".text")
    ]


def _check_requirement(req: str, task: str, diff_entries: list[dict]) -> bool:
    if req == "highlight":
        return any(
            e["path"].endswith(".highlight") and e.get("after") for e in diff_entries
        )
    if req == "bold":
        return any(
            e["path"].endswith(".bold") and e.get("after") is True for e in diff_entries
        )
    if req == "font_size":
        changes = [e for e in diff_entries if e["path"].endswith(".font_size")]
        if not changes:
            return False
        points = first_int(task)
        if points is not None:
            return any(e.get("after") == points * 2 for e in changes)
        return True
    if req == "font_color":
        changes = [e for e in diff_entries if e["path"].endswith(".color")]
        if not changes:
            return False
        for tok in tokens(task):
            if tok in COLOR_HEX:
                return any(e.get("after") == COLOR_HEX[tok] for e in changes)
        return True
    if req == "table":
        added = any(
            e["path"].endswith(".kind") and e.get("after") == "table" for e in diff_entries
        )
        if not added:
            return False
        dims = table_dims(task)
        if dims is None:
            return True
        rows, cols = dims
        return any(
            e["path"].endswith(".rows") and e.get("after") == rows for e in diff_entries
        ) and any(
            e["path"].endswith(".cols") and e.get("after") == cols for e in diff_entries
        )
    if req == "border":
        return any(e["path"] == "page_border" and e.get("after") for e in diff_entries)
    if req == "typed_text":
        changes = _run_text_paths(diff_entries)
        if not changes:
            return False
        quoted = first_quoted(task)
        if quoted is not None:
            return any(e.get("after") == quoted for e in changes)
        return True
    if req == "comment":
        return any(
            e["path"].endswith(".kind") and e.get("after") == "comment" for e in diff_entries
        )
    raise ValueError(f"unknown requirement {req!r}")


def goal_satisfied(task: str, diff_entries: list[dict]) -> bool | None:
    """Whether the canvas diff fulfils the task's keyword requirements.

    Returns None when no rule applies to the task (the judge answers
    "unsure"), False when a rule applies but is unmet or nothing changed.
    """
    if not diff_entries:
        return False
    reqs = goal_requirements(task)
    if not reqs:
        return None
    return all(_check_requirement(req, task, diff_entries) for req in reqs)


def judge_task_quality(task: str) -> str:
    if _AMBIGUOUS_RE.search(task):
        return "ambiguous"
    if word_count(task) > 40 or "step 1" in task.lower() or task.lower().count(" then ") >= 2:
        return "over-detailed"
    return "good"
