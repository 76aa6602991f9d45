"""Document canvas model and its canonical markup serialization.

The canvas is the simulated application's document content: an ordered list
of blocks (paragraph / table / figure / shape / chart / comment), an optional
single selection span, and an optional page border. All values are immutable;
actions produce new :class:`CanvasState` objects.

The canonical markup is the golden wire format: UTF-8, element attributes
sorted lexicographically, 2-space indentation, one element per line. Two
canvases are equal iff their markups are byte-identical, and
``parse_canvas(serialize_canvas(c)) == c`` for every canvas.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from xml.etree import ElementTree

__all__ = [
    "Run",
    "Paragraph",
    "Table",
    "Figure",
    "Shape",
    "Chart",
    "Comment",
    "Selection",
    "CanvasState",
    "serialize_canvas",
    "parse_canvas",
    "paragraph_text",
    "find_text",
    "run_span_index",
]

DEFAULT_COLOR = "#000000"
DEFAULT_FONT_SIZE = 24  # half-points (12pt)

_HEX_RE = re.compile(r"^#[0-9A-F]{6}$")


@dataclass(frozen=True)
class Run:
    """One formatted text run inside a paragraph. font_size is in half-points."""

    text: str
    color: str = DEFAULT_COLOR
    highlight: str | None = None
    font_size: int = DEFAULT_FONT_SIZE
    bold: bool = False

    def __post_init__(self) -> None:
        if not _HEX_RE.match(self.color):
            raise ValueError(f"run color must be #RRGGBB, got {self.color!r}")
        if self.font_size <= 0:
            raise ValueError("font_size must be positive half-points")


@dataclass(frozen=True)
class Paragraph:
    runs: tuple[Run, ...] = ()


@dataclass(frozen=True)
class Table:
    rows: int
    cols: int
    cells: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("table must have at least one row and column")
        if not self.cells:
            blank = tuple(tuple("" for _ in range(self.cols)) for _ in range(self.rows))
            object.__setattr__(self, "cells", blank)
        if len(self.cells) != self.rows or any(len(r) != self.cols for r in self.cells):
            raise ValueError("cell grid does not match rows x cols")


@dataclass(frozen=True)
class Figure:
    name: str
    caption: str = ""


@dataclass(frozen=True)
class Shape:
    shape_type: str
    width: int = 100
    height: int = 100


@dataclass(frozen=True)
class Chart:
    chart_type: str
    title: str = ""


@dataclass(frozen=True)
class Comment:
    author: str
    text: str


Block = Paragraph | Table | Figure | Shape | Chart | Comment

_BLOCK_TAGS: dict[type, str] = {
    Paragraph: "paragraph",
    Table: "table",
    Figure: "figure",
    Shape: "shape",
    Chart: "chart",
    Comment: "comment",
}


@dataclass(frozen=True)
class Selection:
    """Character span [start, end) inside the text of one paragraph block."""

    block: int
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.block < 0 or self.start < 0 or self.end < self.start:
            raise ValueError(f"bad selection span ({self.block}, {self.start}, {self.end})")


@dataclass(frozen=True)
class CanvasState:
    blocks: tuple[Block, ...] = ()
    selection: Selection | None = None
    page_border: str | None = None

    def __post_init__(self) -> None:
        if self.selection is not None:
            _check_selection(self.blocks, self.selection)

    def with_selection(self, selection: Selection | None) -> "CanvasState":
        return replace(self, selection=selection)

    def with_block(self, index: int, block: Block) -> "CanvasState":
        blocks = list(self.blocks)
        blocks[index] = block
        return replace(self, blocks=tuple(blocks))

    def append_block(self, block: Block) -> "CanvasState":
        return replace(self, blocks=self.blocks + (block,))


def _check_selection(blocks: tuple[Block, ...], sel: Selection) -> None:
    if sel.block >= len(blocks) or not isinstance(blocks[sel.block], Paragraph):
        raise ValueError(f"selection references non-paragraph block {sel.block}")
    para = blocks[sel.block]
    if run_span_index(para, sel.start, sel.end) is None:
        raise ValueError("selection span does not lie inside a single run")


def paragraph_text(para: Paragraph) -> str:
    return "".join(run.text for run in para.runs)


def run_span_index(para: Paragraph, start: int, end: int) -> int | None:
    """Index of the run that fully contains [start, end), or None."""
    offset = 0
    for i, run in enumerate(para.runs):
        run_end = offset + len(run.text)
        if start >= offset and end <= run_end:
            return i
        offset = run_end
    return None


def find_text(state: CanvasState, needle: str) -> Selection | None:
    """First exact case-sensitive substring match across paragraph blocks."""
    if not needle:
        return None
    for idx, block in enumerate(state.blocks):
        if not isinstance(block, Paragraph):
            continue
        pos = paragraph_text(block).find(needle)
        if pos >= 0:
            return Selection(block=idx, start=pos, end=pos + len(needle))
    return None


# --- canonical markup -------------------------------------------------------

def _escape(value: str) -> str:
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
        .replace("\n", "&#10;")
    )


def _attr_str(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _element(tag: str, attrs: dict[str, object], indent: int) -> str:
    parts = [f'{k}="{_escape(_attr_str(v))}"' for k, v in sorted(attrs.items())]
    body = (" " + " ".join(parts)) if parts else ""
    return f'{"  " * indent}<{tag}{body}/>'


def serialize_canvas(state: CanvasState) -> str:
    lines = []
    root_attrs = ""
    if state.page_border is not None:
        root_attrs = f' page_border="{_escape(state.page_border)}"'
    lines.append(f"<canvas{root_attrs}>")
    for block in state.blocks:
        tag = _BLOCK_TAGS[type(block)]
        if isinstance(block, Paragraph):
            if block.runs:
                lines.append(f"  <{tag}>")
                for run in block.runs:
                    attrs: dict[str, object] = {
                        "bold": run.bold,
                        "color": run.color,
                        "font_size": run.font_size,
                        "text": run.text,
                    }
                    if run.highlight is not None:
                        attrs["highlight"] = run.highlight
                    lines.append(_element("run", attrs, 2))
                lines.append(f"  </{tag}>")
            else:
                lines.append(f"  <{tag}/>")
        elif isinstance(block, Table):
            lines.append(f'  <{tag} cols="{block.cols}" rows="{block.rows}">')
            for r, row in enumerate(block.cells):
                for c, cell in enumerate(row):
                    lines.append(_element("cell", {"col": c, "row": r, "text": cell}, 2))
            lines.append(f"  </{tag}>")
        elif isinstance(block, Figure):
            lines.append(_element(tag, {"caption": block.caption, "name": block.name}, 1))
        elif isinstance(block, Shape):
            lines.append(
                _element(
                    tag,
                    {"height": block.height, "shape_type": block.shape_type, "width": block.width},
                    1,
                )
            )
        elif isinstance(block, Chart):
            lines.append(_element(tag, {"chart_type": block.chart_type, "title": block.title}, 1))
        elif isinstance(block, Comment):
            lines.append(_element(tag, {"author": block.author, "text": block.text}, 1))
    if state.selection is not None:
        sel = state.selection
        lines.append(
            _element("selection", {"block": sel.block, "end": sel.end, "start": sel.start}, 1)
        )
    lines.append("</canvas>")
    return "\n".join(lines) + "\n"


def _parse_bool(value: str) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise ValueError(f"bad boolean attribute {value!r}")


def parse_canvas(text: str) -> CanvasState:
    root = ElementTree.fromstring(text)
    if root.tag != "canvas":
        raise ValueError(f"expected <canvas> root, got <{root.tag}>")
    page_border = root.attrib.get("page_border")
    blocks: list[Block] = []
    selection: Selection | None = None
    for el in root:
        if el.tag == "paragraph":
            runs = []
            for run_el in el:
                if run_el.tag != "run":
                    raise ValueError(f"unexpected <{run_el.tag}> inside paragraph")
                a = run_el.attrib
                runs.append(
                    Run(
                        text=a.get("text", ""),
                        color=a.get("color", DEFAULT_COLOR),
                        highlight=a.get("highlight"),
                        font_size=int(a.get("font_size", DEFAULT_FONT_SIZE)),
                        bold=_parse_bool(a.get("bold", "false")),
                    )
                )
            blocks.append(Paragraph(runs=tuple(runs)))
        elif el.tag == "table":
            rows = int(el.attrib["rows"])
            cols = int(el.attrib["cols"])
            grid = [["" for _ in range(cols)] for _ in range(rows)]
            for cell_el in el:
                if cell_el.tag != "cell":
                    raise ValueError(f"unexpected <{cell_el.tag}> inside table")
                grid[int(cell_el.attrib["row"])][int(cell_el.attrib["col"])] = cell_el.attrib.get(
                    "text", ""
                )
            blocks.append(Table(rows=rows, cols=cols, cells=tuple(tuple(r) for r in grid)))
        elif el.tag == "figure":
            blocks.append(Figure(name=el.attrib["name"], caption=el.attrib.get("caption", "")))
        elif el.tag == "shape":
            blocks.append(
                Shape(
                    shape_type=el.attrib["shape_type"],
                    width=int(el.attrib["width"]),
                    height=int(el.attrib["height"]),
                )
            )
        elif el.tag == "chart":
            blocks.append(Chart(chart_type=el.attrib["chart_type"], title=el.attrib.get("title", "")))
        elif el.tag == "comment":
            blocks.append(Comment(author=el.attrib["author"], text=el.attrib.get("text", "")))
        elif el.tag == "selection":
            selection = Selection(
                block=int(el.attrib["block"]),
                start=int(el.attrib["start"]),
                end=int(el.attrib["end"]),
            )
        else:
            raise ValueError(f"unknown canvas element <{el.tag}>")
    return CanvasState(blocks=tuple(blocks), selection=selection, page_border=page_border)
