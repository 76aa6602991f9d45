"""Canvas model: canonical markup, selection rules, and diffing."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from lamlab.env_sim import (
    CanvasState,
    Chart,
    Comment,
    Figure,
    Paragraph,
    Run,
    Selection,
    Shape,
    Table,
    apply_diff,
    diff_canvas,
    find_text,
    parse_canvas,
    serialize_canvas,
)
from lamlab.env_sim.diffs import flatten_canvas

TEXTS = ["", "hello world", "Test For Fun", 'quote " and & amp < > done', "line\nbreak"]


def runs_strategy():
    return st.builds(
        Run,
        text=st.sampled_from(TEXTS),
        color=st.sampled_from(["#000000", "#FF0000", "#00B050"]),
        highlight=st.sampled_from([None, "yellow", "green"]),
        font_size=st.integers(min_value=2, max_value=96),
        bold=st.booleans(),
    )


def blocks_strategy():
    return st.one_of(
        st.builds(Paragraph, runs=st.lists(runs_strategy(), max_size=3).map(tuple)),
        st.builds(
            Table,
            rows=st.integers(min_value=1, max_value=3),
            cols=st.integers(min_value=1, max_value=3),
        ),
        st.builds(Figure, name=st.sampled_from(["a.png", "b.png"]), caption=st.sampled_from(TEXTS)),
        st.builds(
            Shape,
            shape_type=st.sampled_from(["rectangle", "oval"]),
            width=st.integers(min_value=1, max_value=500),
            height=st.integers(min_value=1, max_value=500),
        ),
        st.builds(Chart, chart_type=st.sampled_from(["bar", "line"]), title=st.sampled_from(TEXTS)),
        st.builds(Comment, author=st.sampled_from(["Reviewer", "Editor"]), text=st.sampled_from(TEXTS)),
    )


def canvas_strategy():
    return st.builds(
        CanvasState,
        blocks=st.lists(blocks_strategy(), max_size=5).map(tuple),
        page_border=st.sampled_from([None, "box", "shadow"]),
    )


@given(canvas_strategy())
@settings(max_examples=150, deadline=None)
def test_serialize_parse_round_trip(canvas):
    assert parse_canvas(serialize_canvas(canvas)) == canvas


@given(canvas_strategy())
@settings(max_examples=50, deadline=None)
def test_serialize_is_stable_fixed_point(canvas):
    text = serialize_canvas(canvas)
    assert serialize_canvas(parse_canvas(text)) == text


def test_canonical_markup_golden():
    canvas = CanvasState(
        blocks=(
            Paragraph(runs=(Run(text="hello world", highlight="yellow"),)),
            Table(rows=1, cols=2),
        ),
        selection=Selection(block=0, start=0, end=5),
        page_border="box",
    )
    assert serialize_canvas(canvas) == (
        '<canvas page_border="box">\n'
        "  <paragraph>\n"
        '    <run bold="false" color="#000000" font_size="24" highlight="yellow" text="hello world"/>\n'
        "  </paragraph>\n"
        '  <table cols="2" rows="1">\n'
        '    <cell col="0" row="0" text=""/>\n'
        '    <cell col="1" row="0" text=""/>\n'
        "  </table>\n"
        '  <selection block="0" end="5" start="0"/>\n'
        "</canvas>\n"
    )


def test_attributes_sorted_lexicographically():
    text = serialize_canvas(CanvasState(blocks=(Shape(shape_type="rectangle", width=9, height=7),)))
    line = [l for l in text.splitlines() if "shape" in l][0]
    keys = [part.split("=")[0] for part in line.strip().strip("<>/").split()[1:]]
    assert keys == sorted(keys)


def test_selection_must_sit_inside_one_run():
    para = Paragraph(runs=(Run(text="abc"), Run(text="def")))
    with pytest.raises(ValueError):
        CanvasState(blocks=(para,), selection=Selection(block=0, start=2, end=4))
    # Within the second run is fine.
    CanvasState(blocks=(para,), selection=Selection(block=0, start=3, end=5))


def test_selection_on_non_paragraph_rejected():
    with pytest.raises(ValueError):
        CanvasState(blocks=(Table(rows=1, cols=1),), selection=Selection(block=0, start=0, end=0))


def test_find_text_first_exact_match():
    canvas = CanvasState(
        blocks=(
            Paragraph(runs=(Run(text="hello world"),)),
            Paragraph(runs=(Run(text="hello again"),)),
        )
    )
    sel = find_text(canvas, "hello")
    assert (sel.block, sel.start, sel.end) == (0, 0, 5)
    assert find_text(canvas, "HELLO") is None  # case-sensitive
    assert find_text(canvas, "absent") is None


# --- diffing -------------------------------------------------------------


def test_diff_identical_is_empty():
    canvas = CanvasState(blocks=(Paragraph(runs=(Run(text="x"),)),))
    assert diff_canvas(canvas, canvas) == []


def _independent_line_diff(before, after):
    """Oracle: compare canonical markups line by line, then recover the
    changed attribute paths via the flattened maps."""
    import difflib

    before_lines = serialize_canvas(before).splitlines()
    after_lines = serialize_canvas(after).splitlines()
    changed = any(True for _ in difflib.unified_diff(before_lines, after_lines, lineterm=""))
    fb, fa = flatten_canvas(before), flatten_canvas(after)
    paths = {p for p in set(fb) | set(fa) if fb.get(p) != fa.get(p) or (p in fb) != (p in fa)}
    return changed, paths


def test_diff_highlight_single_entry_matches_line_oracle():
    before = CanvasState(blocks=(Paragraph(runs=(Run(text="hello world"),)),))
    after = CanvasState(blocks=(Paragraph(runs=(Run(text="hello world", highlight="yellow"),)),))
    entries = diff_canvas(before, after)
    assert len(entries) == 1
    entry = entries[0]
    assert entry.path == "blocks[0].runs[0].highlight"
    assert entry.before is None
    assert entry.after == "yellow"
    changed, oracle_paths = _independent_line_diff(before, after)
    assert changed
    assert {e.path for e in entries} == oracle_paths


def test_diff_font_size_change():
    before = CanvasState(blocks=(Paragraph(runs=(Run(text="x", font_size=24),)),))
    after = CanvasState(blocks=(Paragraph(runs=(Run(text="x", font_size=28),)),))
    entries = diff_canvas(before, after)
    assert [(e.path, e.before, e.after) for e in entries] == [
        ("blocks[0].runs[0].font_size", 24, 28)
    ]


def test_diff_paths_sorted():
    before = CanvasState()
    after = CanvasState(
        blocks=(Paragraph(runs=(Run(text="a"),)), Table(rows=1, cols=1)),
        page_border="box",
    )
    entries = diff_canvas(before, after)
    keys = [e.path for e in entries]
    assert keys == sorted(keys, key=lambda p: [t for t in p.replace("]", "").split("[")])
    assert all(e.before is None for e in entries)


def test_diff_empty_iff_serializations_equal():
    rng = random.Random(7)
    canvases = [_random_canvas(rng) for _ in range(30)]
    for a in canvases:
        for b in canvases[:10]:
            empty = diff_canvas(a, b) == []
            assert empty == (serialize_canvas(a) == serialize_canvas(b))


def _random_canvas(rng):
    blocks = []
    for _ in range(rng.randint(0, 4)):
        kind = rng.randint(0, 5)
        if kind == 0:
            blocks.append(
                Paragraph(
                    runs=tuple(
                        Run(
                            text=rng.choice(TEXTS),
                            highlight=rng.choice([None, "yellow"]),
                            bold=rng.random() < 0.5,
                            font_size=rng.choice([20, 24, 28]),
                        )
                        for _ in range(rng.randint(0, 2))
                    )
                )
            )
        elif kind == 1:
            blocks.append(Table(rows=rng.randint(1, 3), cols=rng.randint(1, 3)))
        elif kind == 2:
            blocks.append(Figure(name="f.png", caption=rng.choice(TEXTS)))
        elif kind == 3:
            blocks.append(Shape(shape_type="rectangle", width=rng.randint(1, 300), height=10))
        elif kind == 4:
            blocks.append(Chart(chart_type="bar", title=rng.choice(TEXTS)))
        else:
            blocks.append(Comment(author="Reviewer", text=rng.choice(TEXTS)))
    return CanvasState(blocks=tuple(blocks), page_border=rng.choice([None, "box"]))


def test_apply_diff_reconstructs_after():
    rng = random.Random(21)
    for _ in range(60):
        before = _random_canvas(rng)
        after = _random_canvas(rng)
        entries = diff_canvas(before, after)
        assert apply_diff(before, entries) == after
