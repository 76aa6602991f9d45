"""Feature extraction for candidate scoring.

Every (state, candidate) pair maps to a fixed-length vector aligned with
FEATURE_NAMES: a block of hand-designed signals followed by one-hot blocks
for the function and the target control type. All features are deterministic
functions of the pair and lie in [0, 1].
"""

from __future__ import annotations

from ..env_sim import REGISTRY, needs_selection
from ..textutil import token_overlap
from .candidates import CandidateAction
from .state import AgentState

__all__ = [
    "BASE_FEATURES",
    "FEATURE_NAMES",
    "STATUS_FEATURES",
    "FORMAT_KEYWORDS",
    "featurize",
    "status_features",
]

# Base signal block. Definitions:
#   overlap_task      token overlap of candidate control text with the task
#   overlap_plan      token overlap of control text with the current plan step
#   func_task_affinity   1 if a trigger keyword of the function is in the task
#   func_plan_affinity   1 if a trigger keyword is in the current plan step
#   repeat_last       1 if the candidate equals the previously executed action
#   progress          (step_id - 1) / 20
#   selection_ready   candidate needs a selection and one is active
#   selection_missing candidate needs a selection and none is active
#   select_needed     select_text candidate, no selection yet, formatting task
#   position_prior    1 / (1 + index of the control in the observed list)
#   args_present      1 if the candidate carries any arguments
#   is_finish         1 for the pure-FINISH pseudo-candidate
#   finish_plan_done  is_finish and the previous plan is exhausted
BASE_FEATURES = (
    "overlap_task",
    "overlap_plan",
    "func_task_affinity",
    "func_plan_affinity",
    "repeat_last",
    "progress",
    "selection_ready",
    "selection_missing",
    "select_needed",
    "position_prior",
    "args_present",
    "is_finish",
    "finish_plan_done",
)

FUNC_TRIGGERS: dict[str, tuple[str, ...]] = {
    "click_input": (),
    "set_edit_text": ("enter", "edit"),
    "type_keys": ("type", "write", "append"),
    "select_text": ("highlight", "bold", "color", "size", "font", "comment"),
    "select_option": ("option", "style", "dropdown"),
    "scroll": ("scroll",),
    "toggle_highlight": ("highlight",),
    "set_font_size": ("font size", "size"),
    "set_font_color": ("color",),
    "insert_page_border": ("border",),
    "insert_table": ("table",),
    "toggle_bold": ("bold",),
}

FORMAT_KEYWORDS = ("highlight", "bold", "color", "size", "font", "comment")

_FUNC_BLOCK = tuple(f"func::{name}" for name in REGISTRY) + ("func::<finish>",)
_CTYPE_BLOCK = (
    "ctype::Button",
    "ctype::Edit",
    "ctype::TabItem",
    "ctype::ListItem",
    "ctype::MenuItem",
    "ctype::ScrollBar",
    "ctype::TreeItem",
    "ctype::Document",
    "ctype::Hyperlink",
    "ctype::ComboBox",
    "ctype::<none>",
)

FEATURE_NAMES: tuple[str, ...] = BASE_FEATURES + _FUNC_BLOCK + _CTYPE_BLOCK

STATUS_FEATURES = (
    "bias",
    "progress",
    "is_first_step",
    "plan_remaining",
    "plan_on_last_step",
    "format_task",
)


def _affinity(function: str, text: str) -> float:
    low = text.lower()
    return 1.0 if any(trigger in low for trigger in FUNC_TRIGGERS.get(function, ())) else 0.0


def featurize(state: AgentState, candidate: CandidateAction) -> list[float]:
    current_step = state.previous_plan[0] if state.previous_plan else ""
    selection = state.selection_active()
    last = state.last_action()

    repeat = 0.0
    if last is not None and not candidate.is_finish:
        if (
            last.function == candidate.function
            and last.control_text == candidate.control_text
            and dict(last.args) == candidate.args_dict()
        ):
            repeat = 1.0

    needs_sel = (not candidate.is_finish) and needs_selection(
        candidate.function, candidate.control_text
    )
    task_has_format = any(k in state.task.lower() for k in FORMAT_KEYWORDS)

    position_prior = 0.0
    if candidate.control is not None:
        label = candidate.control_label
        if label.isdigit():
            position_prior = 1.0 / (1.0 + float(label))

    values = [
        token_overlap(candidate.control_text, state.task) if candidate.control else 0.0,
        token_overlap(candidate.control_text, current_step) if candidate.control else 0.0,
        0.0 if candidate.is_finish else _affinity(candidate.function, state.task),
        0.0 if candidate.is_finish else _affinity(candidate.function, current_step),
        repeat,
        min((state.step_id - 1) / 20.0, 1.0),
        1.0 if needs_sel and selection else 0.0,
        1.0 if needs_sel and not selection else 0.0,
        1.0
        if candidate.function == "select_text" and not selection and task_has_format
        else 0.0,
        position_prior,
        1.0 if candidate.args else 0.0,
        1.0 if candidate.is_finish else 0.0,
        1.0 if candidate.is_finish and not state.previous_plan else 0.0,
    ]
    func_name = "<finish>" if candidate.is_finish else candidate.function
    values.extend(1.0 if name == f"func::{func_name}" else 0.0 for name in _FUNC_BLOCK)
    ctype = candidate.control_type or "<none>"
    values.extend(1.0 if name == f"ctype::{ctype}" else 0.0 for name in _CTYPE_BLOCK)
    return values


def status_features(state: AgentState) -> list[float]:
    task_has_format = any(k in state.task.lower() for k in FORMAT_KEYWORDS)
    return [
        1.0,
        min((state.step_id - 1) / 20.0, 1.0),
        1.0 if state.step_id == 1 else 0.0,
        min(len(state.previous_plan) / 20.0, 1.0),
        1.0 if len(state.previous_plan) == 1 else 0.0,
        1.0 if task_has_format else 0.0,
    ]
