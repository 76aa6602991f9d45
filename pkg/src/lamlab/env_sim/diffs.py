"""Attribute-level canvas diffing.

A canvas flattens to a path -> scalar map; the diff of two canvases is the
path-sorted list of entries whose values differ (``before``/``after`` are
None for added/removed paths). Applying a diff to its ``before`` state
reconstructs the ``after`` state exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .canvas import (
    CanvasState,
    Chart,
    Comment,
    Figure,
    Paragraph,
    Run,
    Selection,
    Shape,
    Table,
)

__all__ = ["CanvasDiffEntry", "flatten_canvas", "diff_canvas", "apply_diff"]

Scalar = str | int | bool | None


@dataclass(frozen=True)
class CanvasDiffEntry:
    path: str
    before: Scalar
    after: Scalar

    def to_dict(self) -> dict:
        return {"path": self.path, "before": self.before, "after": self.after}

    @classmethod
    def from_dict(cls, obj: dict) -> "CanvasDiffEntry":
        return cls(path=obj["path"], before=obj.get("before"), after=obj.get("after"))


def flatten_canvas(state: CanvasState) -> dict[str, Scalar]:
    flat: dict[str, Scalar] = {}
    if state.page_border is not None:
        flat["page_border"] = state.page_border
    if state.selection is not None:
        flat["selection.block"] = state.selection.block
        flat["selection.start"] = state.selection.start
        flat["selection.end"] = state.selection.end
    for i, block in enumerate(state.blocks):
        base = f"blocks[{i}]"
        if isinstance(block, Paragraph):
            flat[f"{base}.kind"] = "paragraph"
            for j, run in enumerate(block.runs):
                rb = f"{base}.runs[{j}]"
                flat[f"{rb}.text"] = run.text
                flat[f"{rb}.color"] = run.color
                flat[f"{rb}.font_size"] = run.font_size
                flat[f"{rb}.bold"] = run.bold
                if run.highlight is not None:
                    flat[f"{rb}.highlight"] = run.highlight
        elif isinstance(block, Table):
            flat[f"{base}.kind"] = "table"
            flat[f"{base}.rows"] = block.rows
            flat[f"{base}.cols"] = block.cols
            for r, row in enumerate(block.cells):
                for c, cell in enumerate(row):
                    flat[f"{base}.cells[{r}][{c}]"] = cell
        elif isinstance(block, Figure):
            flat[f"{base}.kind"] = "figure"
            flat[f"{base}.name"] = block.name
            flat[f"{base}.caption"] = block.caption
        elif isinstance(block, Shape):
            flat[f"{base}.kind"] = "shape"
            flat[f"{base}.shape_type"] = block.shape_type
            flat[f"{base}.width"] = block.width
            flat[f"{base}.height"] = block.height
        elif isinstance(block, Chart):
            flat[f"{base}.kind"] = "chart"
            flat[f"{base}.chart_type"] = block.chart_type
            flat[f"{base}.title"] = block.title
        elif isinstance(block, Comment):
            flat[f"{base}.kind"] = "comment"
            flat[f"{base}.author"] = block.author
            flat[f"{base}.text"] = block.text
    return flat


_PATH_TOKEN_RE = re.compile(r"([A-Za-z_]+)|\[(\d+)\]")


def _path_key(path: str) -> tuple:
    key: list[object] = []
    for name, index in _PATH_TOKEN_RE.findall(path):
        if name:
            key.append((0, name))
        else:
            key.append((1, int(index)))
    return tuple(key)


def diff_canvas(before: CanvasState, after: CanvasState) -> list[CanvasDiffEntry]:
    """Minimal attribute-level diff; empty iff canonical markups are equal."""
    fb, fa = flatten_canvas(before), flatten_canvas(after)
    entries = [
        CanvasDiffEntry(path=path, before=fb.get(path), after=fa.get(path))
        for path in set(fb) | set(fa)
        if fb.get(path) != fa.get(path) or (path in fb) != (path in fa)
    ]
    entries.sort(key=lambda e: _path_key(e.path))
    return entries


def apply_diff(before: CanvasState, entries: Iterable[CanvasDiffEntry]) -> CanvasState:
    # Flattened values are never None, so after=None always means "path removed".
    flat = flatten_canvas(before)
    for entry in entries:
        if entry.after is None:
            flat.pop(entry.path, None)
        else:
            flat[entry.path] = entry.after
    return _unflatten(flat)


def _unflatten(flat: dict[str, Scalar]) -> CanvasState:
    block_data: dict[int, dict] = {}
    page_border = flat.get("page_border")
    sel = None
    if "selection.block" in flat:
        sel = Selection(
            block=int(flat["selection.block"]),
            start=int(flat["selection.start"]),
            end=int(flat["selection.end"]),
        )
    for path, value in flat.items():
        if not path.startswith("blocks["):
            continue
        m = re.match(r"blocks\[(\d+)\]\.(.+)$", path)
        if not m:
            raise ValueError(f"bad diff path {path!r}")
        idx, rest = int(m.group(1)), m.group(2)
        block_data.setdefault(idx, {})[rest] = value

    blocks = []
    for idx in sorted(block_data):
        data = block_data[idx]
        if idx != len(blocks):
            raise ValueError(f"non-contiguous block index {idx}")
        blocks.append(_build_block(data))
    return CanvasState(blocks=tuple(blocks), selection=sel, page_border=page_border)


def _build_block(data: dict):
    kind = data.pop("kind")
    if kind == "paragraph":
        runs_data: dict[int, dict] = {}
        for key, value in data.items():
            m = re.match(r"runs\[(\d+)\]\.(\w+)$", key)
            if not m:
                raise ValueError(f"bad paragraph path {key!r}")
            runs_data.setdefault(int(m.group(1)), {})[m.group(2)] = value
        runs = []
        for j in sorted(runs_data):
            if j != len(runs):
                raise ValueError(f"non-contiguous run index {j}")
            rd = runs_data[j]
            runs.append(
                Run(
                    text=rd.get("text", ""),
                    color=rd.get("color", "#000000"),
                    highlight=rd.get("highlight"),
                    font_size=int(rd.get("font_size", 24)),
                    bold=bool(rd.get("bold", False)),
                )
            )
        return Paragraph(runs=tuple(runs))
    if kind == "table":
        rows, cols = int(data["rows"]), int(data["cols"])
        grid = [["" for _ in range(cols)] for _ in range(rows)]
        for key, value in data.items():
            m = re.match(r"cells\[(\d+)\]\[(\d+)\]$", key)
            if m:
                grid[int(m.group(1))][int(m.group(2))] = str(value)
        return Table(rows=rows, cols=cols, cells=tuple(tuple(r) for r in grid))
    if kind == "figure":
        return Figure(name=str(data["name"]), caption=str(data.get("caption", "")))
    if kind == "shape":
        return Shape(
            shape_type=str(data["shape_type"]),
            width=int(data["width"]),
            height=int(data["height"]),
        )
    if kind == "chart":
        return Chart(chart_type=str(data["chart_type"]), title=str(data.get("title", "")))
    if kind == "comment":
        return Comment(author=str(data["author"]), text=str(data.get("text", "")))
    raise ValueError(f"unknown block kind {kind!r}")
