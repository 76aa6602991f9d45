"""Structured actions: the closed registry of callable functions and their
execution semantics against a snapshot.

Execution never mutates its input; it returns either a successor snapshot
with an ok result, or the unchanged snapshot with exactly one typed error
recorded in the result.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Mapping, TYPE_CHECKING

from ..errors import BadArgs, DisabledControl, LamLabError, UnknownFunction
from ..textutil import COLOR_HEX
from .canvas import (
    CanvasState,
    Comment,
    Paragraph,
    Run,
    Selection,
    Table,
    find_text,
    paragraph_text,
    run_span_index,
)
from .controls import DEFAULT_ALIASES, ControlNode, map_tree, resolve_in_tree

if TYPE_CHECKING:
    from .snapshot import EnvSnapshot

__all__ = [
    "ActionCall",
    "ExecutionResult",
    "FunctionSpec",
    "REGISTRY",
    "registry_order",
    "registry_help",
    "needs_selection",
    "apply_action",
    "STATUS_CONTINUE",
    "STATUS_FINISH",
]

STATUS_CONTINUE = "CONTINUE"
STATUS_FINISH = "FINISH"

_HEX_RE = re.compile(r"^#[0-9A-Fa-f]{6}$")


@dataclass(frozen=True)
class ActionCall:
    """One grounded action: a target control plus a registry function call."""

    step: str = ""
    control_label: str = ""
    control_text: str = ""
    function: str = ""
    args: Mapping[str, object] = field(default_factory=dict)
    status: str = STATUS_CONTINUE

    def to_call_dict(self) -> dict:
        return {
            "step": self.step,
            "controlLabel": self.control_label,
            "controlText": self.control_text,
            "function": self.function,
            "args": dict(self.args),
        }

    @classmethod
    def from_call_dict(cls, obj: Mapping, status: str = STATUS_CONTINUE) -> "ActionCall":
        return cls(
            step=str(obj.get("step", "")),
            control_label=str(obj.get("controlLabel", "")),
            control_text=str(obj.get("controlText", "")),
            function=str(obj.get("function", "")),
            args=dict(obj.get("args", {}) or {}),
            status=str(obj.get("status", status)),
        )


@dataclass(frozen=True)
class ExecutionResult:
    ok: bool
    observation: str = ""
    error: str | None = None

    def to_dict(self) -> dict:
        out: dict = {"ok": self.ok, "observation": self.observation}
        if self.error is not None:
            out["error"] = self.error
        return out

    @classmethod
    def from_dict(cls, obj: Mapping) -> "ExecutionResult":
        return cls(ok=bool(obj["ok"]), observation=obj.get("observation", ""), error=obj.get("error"))


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    requires_control: bool
    control_types: tuple[str, ...]  # empty = any / no target
    required_args: tuple[str, ...]
    optional_args: tuple[str, ...]
    summary: str


# Closed registry. Order matters: it is the tie-break order for policies.
REGISTRY: dict[str, FunctionSpec] = {
    spec.name: spec
    for spec in (
        FunctionSpec(
            "click_input",
            True,
            ("Button", "TabItem", "ListItem", "MenuItem", "TreeItem", "Hyperlink", "ComboBox"),
            (),
            ("button", "double"),
            "Click the target control with the mouse. Args: button ('left'|'right'), double (bool).",
        ),
        FunctionSpec(
            "set_edit_text",
            True,
            ("Edit", "ComboBox", "Document"),
            ("text",),
            (),
            "Replace the text content of an editable control. Args: text (str).",
        ),
        FunctionSpec(
            "type_keys",
            False,
            (),
            ("text",),
            (),
            "Type the given text at the end of the document. Args: text (str).",
        ),
        FunctionSpec(
            "select_text",
            False,
            (),
            ("text",),
            (),
            "Select the first exact occurrence of the given text in the document. Args: text (str).",
        ),
        FunctionSpec(
            "select_option",
            True,
            ("ComboBox", "ListItem", "MenuItem"),
            ("option",),
            (),
            "Select a named option in a combo box, list, or menu. Args: option (str).",
        ),
        FunctionSpec(
            "scroll",
            True,
            ("ScrollBar",),
            (),
            ("direction", "amount"),
            "Scroll the view. Args: direction ('up'|'down'), amount (positive int).",
        ),
        FunctionSpec(
            "toggle_highlight",
            False,
            (),
            (),
            ("color",),
            "Toggle a highlight color on the selected text. Args: color (name, default 'yellow').",
        ),
        FunctionSpec(
            "set_font_size",
            False,
            (),
            ("size",),
            (),
            "Set the font size of the selected text. Args: size (points, positive number).",
        ),
        FunctionSpec(
            "set_font_color",
            False,
            (),
            ("color",),
            (),
            "Set the font color of the selected text. Args: color (name or #RRGGBB).",
        ),
        FunctionSpec(
            "insert_page_border",
            False,
            (),
            (),
            ("style",),
            "Add a page border to the document. Args: style (default 'box').",
        ),
        FunctionSpec(
            "insert_table",
            False,
            (),
            ("rows", "cols"),
            (),
            "Insert a table at the end of the document. Args: rows (int), cols (int).",
        ),
        FunctionSpec(
            "toggle_bold",
            False,
            (),
            (),
            (),
            "Toggle bold on the selected text. No args.",
        ),
    )
}

# Controls whose click semantics edit the selection, so they need one.
_SELECTION_BUTTONS = ("Text Highlight Color", "Bold", "Font Color")

_SELECTION_FUNCTIONS = ("toggle_highlight", "set_font_size", "set_font_color", "toggle_bold")


def needs_selection(function: str, control_text: str = "") -> bool:
    """True when the call only succeeds with an active text selection."""
    if function in _SELECTION_FUNCTIONS:
        return True
    if function == "click_input" and control_text in _SELECTION_BUTTONS:
        return True
    if function == "set_edit_text" and control_text == "Font Size":
        return True
    return False


def registry_order(function: str) -> int:
    names = list(REGISTRY)
    return names.index(function) if function in REGISTRY else len(names)


def registry_help() -> str:
    """Human-readable API list, substituted into prompt templates."""
    lines = []
    for spec in REGISTRY.values():
        target = "target control required" if spec.requires_control else "no target control"
        lines.append(f"- {spec.name}: {spec.summary} ({target})")
    return "\n".join(lines)


def apply_action(
    snapshot: "EnvSnapshot",
    action: ActionCall,
    aliases: Mapping[str, str] = DEFAULT_ALIASES,
) -> tuple["EnvSnapshot", ExecutionResult]:
    """Execute one action. On failure the input snapshot is returned unchanged
    together with exactly one typed error name in the result."""
    try:
        new_snapshot, observation = _execute(snapshot, action, aliases)
    except LamLabError as exc:
        return snapshot, ExecutionResult(ok=False, observation=str(exc), error=type(exc).__name__)
    return new_snapshot, ExecutionResult(ok=True, observation=observation)


def _execute(
    snapshot: "EnvSnapshot", action: ActionCall, aliases: Mapping[str, str]
) -> tuple["EnvSnapshot", str]:
    spec = REGISTRY.get(action.function)
    if spec is None:
        raise UnknownFunction(f"function {action.function!r} is not registered")

    args = _check_args(spec, action.args)

    target: ControlNode | None = None
    if action.control_label or action.control_text:
        target = resolve_in_tree(
            snapshot.controls, action.control_label or None, action.control_text or None, aliases
        )
    if spec.requires_control:
        if target is None:
            raise BadArgs(f"{spec.name} requires a target control")
        if not target.enabled:
            raise DisabledControl(f"control {target.control_text!r} is disabled")
        if spec.control_types and target.control_type not in spec.control_types:
            raise BadArgs(
                f"{spec.name} cannot target a {target.control_type} control"
            )

    canvas, controls, observation = _SEMANTICS[spec.name](snapshot, target, args)
    return snapshot.advance(canvas, controls), observation


def _check_args(spec: FunctionSpec, args: Mapping[str, object]) -> dict:
    known = set(spec.required_args) | set(spec.optional_args) | {"control_id"}
    unknown = [k for k in args if k not in known]
    if unknown:
        raise BadArgs(f"{spec.name} got unknown args {sorted(unknown)}")
    missing = [k for k in spec.required_args if k not in args]
    if missing:
        raise BadArgs(f"{spec.name} missing required args {missing}")
    return {k: v for k, v in args.items() if k != "control_id"}


# --- selection helpers -------------------------------------------------------

def _require_selection(canvas: CanvasState) -> tuple[Selection, Paragraph, int]:
    sel = canvas.selection
    if sel is None:
        raise BadArgs("no active text selection")
    para = canvas.blocks[sel.block]
    idx = run_span_index(para, sel.start, sel.end)
    if idx is None:
        raise BadArgs("selection no longer maps to a single run")
    return sel, para, idx


def _update_selected_run(canvas: CanvasState, **changes: object) -> tuple[CanvasState, Run]:
    sel, para, idx = _require_selection(canvas)
    run = para.runs[idx]
    new_run = replace(run, **changes)
    runs = list(para.runs)
    runs[idx] = new_run
    return canvas.with_block(sel.block, Paragraph(runs=tuple(runs))), new_run


def _selected_text(canvas: CanvasState) -> str:
    sel, para, _ = _require_selection(canvas)
    return paragraph_text(para)[sel.start : sel.end]


# --- per-function semantics ---------------------------------------------------
# Each handler returns (new canvas, new control root, observation text).

def _fn_click_input(snapshot, target, args):
    button = args.get("button", "left")
    double = args.get("double", False)
    if button not in ("left", "right"):
        raise BadArgs(f"bad mouse button {button!r}")
    if not isinstance(double, bool):
        raise BadArgs("double must be a boolean")
    canvas, controls = snapshot.canvas, snapshot.controls

    if target.control_type in ("TabItem", "ListItem", "MenuItem", "TreeItem"):
        controls = _select_node(controls, target)
        return canvas, controls, f"Selected {target.control_text}"

    if target.control_type == "Button":
        if target.control_text == "Text Highlight Color":
            canvas, run = _update_selected_run(canvas, highlight="yellow")
            return canvas, controls, f"Applied yellow highlight to {run.text!r}"
        if target.control_text == "Bold":
            _, para, idx = _require_selection(canvas)
            canvas, run = _update_selected_run(canvas, bold=not para.runs[idx].bold)
            state = "bold" if run.bold else "not bold"
            return canvas, controls, f"Toggled {run.text!r} to {state}"
        if target.control_text == "Font Color":
            canvas, run = _update_selected_run(canvas, color=COLOR_HEX["red"])
            return canvas, controls, f"Set font color of {run.text!r} to red"
        if target.control_text == "Page Borders":
            canvas = replace(canvas, page_border="box")
            return canvas, controls, "Added a box page border"
        if target.control_text == "New Comment":
            sel_text = _selected_text(canvas) if canvas.selection else ""
            canvas = canvas.append_block(Comment(author="Reviewer", text=sel_text or "Comment"))
            return canvas, controls, "Inserted a new comment"
        return canvas, controls, f"Clicked {target.control_text}"

    return canvas, controls, f"Clicked {target.control_text}"


def _select_node(root: ControlNode, target: ControlNode) -> ControlNode:
    """Mark the target selected; deselect same-typed siblings."""

    def rebuild(node: ControlNode) -> ControlNode:
        if any(c.label == target.label for c in node.children):
            children = []
            for c in node.children:
                if c.label == target.label:
                    children.append(replace(c, selected=True))
                elif c.control_type == target.control_type and c.selected:
                    children.append(replace(c, selected=False))
                else:
                    children.append(c)
            return replace(node, children=tuple(children))
        return node

    if root.label == target.label:
        return replace(root, selected=True)
    return map_tree(root, rebuild)


def _fn_set_edit_text(snapshot, target, args):
    text = args["text"]
    if not isinstance(text, str):
        raise BadArgs("text must be a string")
    canvas, controls = snapshot.canvas, snapshot.controls

    if target.control_type == "Document":
        para = Paragraph(runs=(Run(text=text),))
        sel = canvas.selection
        block_idx = None
        for i, block in enumerate(canvas.blocks):
            if isinstance(block, Paragraph):
                block_idx = i
                break
        if block_idx is None:
            canvas = canvas.append_block(para)
        else:
            if sel is not None and sel.block == block_idx:
                canvas = canvas.with_selection(None)
            canvas = canvas.with_block(block_idx, para)
        return canvas, controls, f"Replaced document text with {text!r}"

    if target.control_text == "Font Size":
        try:
            points = float(text)
        except ValueError:
            raise BadArgs(f"font size {text!r} is not a number") from None
        if points <= 0:
            raise BadArgs("font size must be positive")
        canvas, run = _update_selected_run(canvas, font_size=int(round(points * 2)))
        return canvas, controls, f"Set font size of {run.text!r} to {points:g}"

    return canvas, controls, f"Entered {text!r} into {target.control_text}"


def _fn_type_keys(snapshot, target, args):
    text = args["text"]
    if not isinstance(text, str) or not text:
        raise BadArgs("text must be a non-empty string")
    canvas = snapshot.canvas
    last_para = None
    for i in range(len(canvas.blocks) - 1, -1, -1):
        if isinstance(canvas.blocks[i], Paragraph):
            last_para = i
            break
    if last_para is None:
        canvas = canvas.append_block(Paragraph(runs=(Run(text=text),)))
    else:
        para = canvas.blocks[last_para]
        canvas = canvas.with_block(last_para, Paragraph(runs=para.runs + (Run(text=text),)))
    return canvas, snapshot.controls, f"Typed {text!r}"


def _fn_select_text(snapshot, target, args):
    text = args["text"]
    if not isinstance(text, str) or not text:
        raise BadArgs("text must be a non-empty string")
    sel = find_text(snapshot.canvas, text)
    if sel is None:
        raise BadArgs(f"text {text!r} not found in the document")
    para = snapshot.canvas.blocks[sel.block]
    if run_span_index(para, sel.start, sel.end) is None:
        raise BadArgs(f"text {text!r} spans more than one run")
    return snapshot.canvas.with_selection(sel), snapshot.controls, f"Selected {text!r}"


def _fn_select_option(snapshot, target, args):
    option = args["option"]
    if not isinstance(option, str) or not option:
        raise BadArgs("option must be a non-empty string")
    controls = snapshot.controls
    if target.control_type == "ComboBox":
        matches = [
            c
            for c in target.children
            if c.control_type == "ListItem" and c.control_text.casefold() == option.casefold()
        ]
        if not matches:
            raise BadArgs(f"combo box {target.control_text!r} has no option {option!r}")
        controls = _select_node(controls, matches[0])
        return snapshot.canvas, controls, f"Selected option {matches[0].control_text}"
    controls = _select_node(controls, target)
    return snapshot.canvas, controls, f"Selected option {target.control_text}"


def _fn_scroll(snapshot, target, args):
    direction = args.get("direction", "down")
    amount = args.get("amount", 1)
    if direction not in ("up", "down"):
        raise BadArgs(f"bad scroll direction {direction!r}")
    if not isinstance(amount, int) or amount < 1:
        raise BadArgs("amount must be a positive integer")
    return snapshot.canvas, snapshot.controls, f"Scrolled {direction} by {amount}"


def _fn_toggle_highlight(snapshot, target, args):
    color = args.get("color", "yellow")
    if not isinstance(color, str) or not color:
        raise BadArgs("color must be a non-empty string")
    color = color.lower()
    _, para, idx = _require_selection(snapshot.canvas)
    current = para.runs[idx].highlight
    new_value = None if current == color else color
    canvas, run = _update_selected_run(snapshot.canvas, highlight=new_value)
    verb = "Applied" if new_value else "Removed"
    return canvas, snapshot.controls, f"{verb} {color} highlight on {run.text!r}"


def _fn_set_font_size(snapshot, target, args):
    size = args["size"]
    if not isinstance(size, (int, float)) or isinstance(size, bool) or size <= 0:
        raise BadArgs(f"size must be a positive number, got {size!r}")
    canvas, run = _update_selected_run(snapshot.canvas, font_size=int(round(size * 2)))
    return canvas, snapshot.controls, f"Set font size of {run.text!r} to {size:g}"


def _fn_set_font_color(snapshot, target, args):
    color = args["color"]
    if not isinstance(color, str) or not color:
        raise BadArgs("color must be a non-empty string")
    hex_value = COLOR_HEX.get(color.lower())
    if hex_value is None:
        if not _HEX_RE.match(color):
            raise BadArgs(f"unknown color {color!r}")
        hex_value = color.upper()
    canvas, run = _update_selected_run(snapshot.canvas, color=hex_value)
    return canvas, snapshot.controls, f"Set font color of {run.text!r} to {color}"


def _fn_insert_page_border(snapshot, target, args):
    style = args.get("style", "box")
    if not isinstance(style, str) or not style:
        raise BadArgs("style must be a non-empty string")
    canvas = replace(snapshot.canvas, page_border=style)
    return canvas, snapshot.controls, f"Added a {style} page border"


def _fn_insert_table(snapshot, target, args):
    rows, cols = args["rows"], args["cols"]
    for name, value in (("rows", rows), ("cols", cols)):
        if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 50:
            raise BadArgs(f"{name} must be an integer in 1..50, got {value!r}")
    canvas = snapshot.canvas.append_block(Table(rows=rows, cols=cols))
    return canvas, snapshot.controls, f"Inserted a {rows} x {cols} table"


def _fn_toggle_bold(snapshot, target, args):
    _, para, idx = _require_selection(snapshot.canvas)
    canvas, run = _update_selected_run(snapshot.canvas, bold=not para.runs[idx].bold)
    state = "bold" if run.bold else "not bold"
    return canvas, snapshot.controls, f"Toggled {run.text!r} to {state}"


_SEMANTICS = {
    "click_input": _fn_click_input,
    "set_edit_text": _fn_set_edit_text,
    "type_keys": _fn_type_keys,
    "select_text": _fn_select_text,
    "select_option": _fn_select_option,
    "scroll": _fn_scroll,
    "toggle_highlight": _fn_toggle_highlight,
    "set_font_size": _fn_set_font_size,
    "set_font_color": _fn_set_font_color,
    "insert_page_border": _fn_insert_page_border,
    "insert_table": _fn_insert_table,
    "toggle_bold": _fn_toggle_bold,
}
