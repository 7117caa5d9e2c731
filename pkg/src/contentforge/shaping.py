"""Contextual form resolution and right-to-left line layout.

Cursive Arabic-script letters change shape with their neighbours. Each
codepoint carries a joining class:

  * Dual        - connects to both the preceding and the following letter
  * Right       - connects only to the preceding letter (alef, dal, reh, ...)
  * NonJoining  - never connects; symbols and digits fall in this group

A letter's presentation form follows from the classes around it: it joins
backwards when the previous letter is Dual, and joins forwards when it is
itself Dual and the next letter can receive a connection (Dual or Right).
Both sides joined gives Medial, only forwards Initial, only backwards
Final, neither Isolated. NonJoining letters are always Isolated.

Layout is strictly right-to-left: the first glyph's box ends at the right
edge and the pen walks left. Words wrap to the next line when they no
longer fit; a single word wider than the whole line is broken between
glyphs, keeping the forms already chosen. Combining marks take no
horizontal space and are overdrawn at their base letter's position.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

from .glyphs import Glyph, GlyphAtlas, GlyphForm, JoiningClass

RGB = tuple[int, int, int]

# Joining classes for the standard Arabic and Farsi repertoire. Letters not
# listed here (Latin, digits, punctuation) default to NonJoining.
DEFAULT_ARABIC_JOINING: dict[int, JoiningClass] = {
    0x0621: JoiningClass.NON_JOINING,  # HAMZA
    0x0622: JoiningClass.RIGHT,        # ALEF WITH MADDA ABOVE
    0x0623: JoiningClass.RIGHT,        # ALEF WITH HAMZA ABOVE
    0x0624: JoiningClass.RIGHT,        # WAW WITH HAMZA ABOVE
    0x0625: JoiningClass.RIGHT,        # ALEF WITH HAMZA BELOW
    0x0626: JoiningClass.DUAL,         # YEH WITH HAMZA ABOVE
    0x0627: JoiningClass.RIGHT,        # ALEF
    0x0628: JoiningClass.DUAL,         # BEH
    0x0629: JoiningClass.RIGHT,        # TEH MARBUTA
    0x062A: JoiningClass.DUAL,         # TEH
    0x062B: JoiningClass.DUAL,         # THEH
    0x062C: JoiningClass.DUAL,         # JEEM
    0x062D: JoiningClass.DUAL,         # HAH
    0x062E: JoiningClass.DUAL,         # KHAH
    0x062F: JoiningClass.RIGHT,        # DAL
    0x0630: JoiningClass.RIGHT,        # THAL
    0x0631: JoiningClass.RIGHT,        # REH
    0x0632: JoiningClass.RIGHT,        # ZAIN
    0x0633: JoiningClass.DUAL,         # SEEN
    0x0634: JoiningClass.DUAL,         # SHEEN
    0x0635: JoiningClass.DUAL,         # SAD
    0x0636: JoiningClass.DUAL,         # DAD
    0x0637: JoiningClass.DUAL,         # TAH
    0x0638: JoiningClass.DUAL,         # ZAH
    0x0639: JoiningClass.DUAL,         # AIN
    0x063A: JoiningClass.DUAL,         # GHAIN
    0x0641: JoiningClass.DUAL,         # FEH
    0x0642: JoiningClass.DUAL,         # QAF
    0x0643: JoiningClass.DUAL,         # KAF
    0x0644: JoiningClass.DUAL,         # LAM
    0x0645: JoiningClass.DUAL,         # MEEM
    0x0646: JoiningClass.DUAL,         # NOON
    0x0647: JoiningClass.DUAL,         # HEH
    0x0648: JoiningClass.RIGHT,        # WAW
    0x064A: JoiningClass.DUAL,         # YEH
    0x0679: JoiningClass.DUAL,         # TTEH
    0x067E: JoiningClass.DUAL,         # PEH
    0x0686: JoiningClass.DUAL,         # TCHEH
    0x0688: JoiningClass.RIGHT,        # DDAL
    0x0691: JoiningClass.RIGHT,        # RREH
    0x0698: JoiningClass.RIGHT,        # JEH
    0x06A9: JoiningClass.DUAL,         # KEHEH
    0x06AF: JoiningClass.DUAL,         # GAF
    0x06BA: JoiningClass.RIGHT,        # NOON GHUNNA
    0x06CC: JoiningClass.DUAL,         # FARSI YEH
    0x06D2: JoiningClass.RIGHT,        # YEH BARREE
}


def joining_class(atlas: GlyphAtlas, codepoint: int) -> JoiningClass:
    """Class of a codepoint per the atlas table; NonJoining when absent."""
    return atlas.joining_table.get(codepoint, JoiningClass.NON_JOINING)


def resolve_form(
    prev: JoiningClass | None,
    this: JoiningClass,
    next: JoiningClass | None,
) -> GlyphForm:
    """Presentation form of a letter from its neighbours' joining classes.

    ``prev``/``next`` are the classes of the adjacent letters inside the
    same word, or None at a word edge.
    """
    if this is JoiningClass.NON_JOINING:
        return GlyphForm.ISOLATED
    joins_prev = prev is JoiningClass.DUAL
    joins_next = this is JoiningClass.DUAL and next in (JoiningClass.DUAL, JoiningClass.RIGHT)
    if joins_prev and joins_next:
        return GlyphForm.MEDIAL
    if joins_next:
        return GlyphForm.INITIAL
    if joins_prev:
        return GlyphForm.FINAL
    return GlyphForm.ISOLATED


@dataclass(frozen=True)
class PositionedGlyph:
    """One glyph placed on a line; (x, y) is the top-left of its advance box."""

    glyph: Glyph
    x: int
    y: int
    color: RGB

    @property
    def codepoint(self) -> int:
        return self.glyph.codepoint

    @property
    def form(self) -> GlyphForm:
        return self.glyph.form


@dataclass(frozen=True)
class LayoutResult:
    lines: tuple[tuple[PositionedGlyph, ...], ...]
    total_height: int
    max_line_width: int


def _is_mark(ch: str) -> bool:
    return unicodedata.combining(ch) != 0


@dataclass(frozen=True)
class _Cluster:
    """A base glyph with any combining-mark glyphs drawn over it."""

    base: Glyph
    marks: tuple[Glyph, ...]

    @property
    def advance(self) -> int:
        return self.base.advance


def _shape_word(atlas: GlyphAtlas, word: str) -> list[_Cluster]:
    """Resolve forms for one space-free word and pick the glyphs to draw.

    Combining marks are transparent when deciding neighbours: the letters
    around a vowel mark still join to each other.
    """
    letters = [(i, ch) for i, ch in enumerate(word) if not _is_mark(ch)]
    forms: dict[int, GlyphForm] = {}
    for pos, (i, ch) in enumerate(letters):
        prev_cls = joining_class(atlas, ord(letters[pos - 1][1])) if pos > 0 else None
        next_cls = joining_class(atlas, ord(letters[pos + 1][1])) if pos + 1 < len(letters) else None
        forms[i] = resolve_form(prev_cls, joining_class(atlas, ord(ch)), next_cls)

    clusters: list[_Cluster] = []
    pending_marks: list[Glyph] = []
    for i, ch in enumerate(word):
        if _is_mark(ch):
            if not atlas.has_codepoint(ord(ch)):
                continue  # no mark glyph in this font, drop it
            mark = atlas.lookup(ord(ch), GlyphForm.ISOLATED)
            if clusters:
                last = clusters[-1]
                clusters[-1] = _Cluster(last.base, last.marks + (mark,))
            else:
                pending_marks.append(mark)
            continue
        base = atlas.lookup(ord(ch), forms[i])
        clusters.append(_Cluster(base, tuple(pending_marks)))
        pending_marks.clear()
    for mark in pending_marks:  # word consisting only of marks
        clusters.append(_Cluster(mark, ()))
    return clusters


def _split_words(text: str) -> list[tuple[int, str]]:
    """Words with the size of the space gap before each; edge gaps dropped."""
    words: list[tuple[int, str]] = []
    gap = 0
    current = ""
    for ch in text:
        if ch == " ":
            if current:
                words.append((gap if words else 0, current))
                current = ""
                gap = 1
            else:
                gap += 1
        else:
            current += ch
    if current:
        words.append((gap if words else 0, current))
    return words


def _shaped_words(atlas: GlyphAtlas, text: str) -> list[tuple[int, list[_Cluster]]]:
    """Shaped words with preceding gap sizes; empty words dropped, first gap 0."""
    words = [(gap, _shape_word(atlas, word)) for gap, word in _split_words(text)]
    words = [(gap, clusters) for gap, clusters in words if clusters]
    if words:
        words[0] = (0, words[0][1])
    return words


def _word_width(clusters: list[_Cluster]) -> int:
    return sum(c.advance for c in clusters)


def shape_text(
    atlas: GlyphAtlas,
    text: str,
    max_width: int | None,
    color: RGB = (0, 0, 0),
) -> LayoutResult:
    """Lay ``text`` out right-to-left within ``max_width`` pixels.

    ``max_width`` of None means a single unbounded line. Words wrap at
    space boundaries; a word wider than the line is broken between glyphs
    without re-resolving its forms. Missing forms fall back to the
    isolated form and then to the replacement glyph, so shaping never
    fails.
    """
    words = _shaped_words(atlas, text)
    if not words:
        return LayoutResult((), 0, 0)

    if max_width is None:
        max_width = sum(
            gap * atlas.space_width + _word_width(clusters) for gap, clusters in words
        )

    lines: list[list[PositionedGlyph]] = []
    widths: list[int] = []
    current: list[PositionedGlyph] = []
    pen = max_width

    def line_y() -> int:
        return len(lines) * atlas.line_height

    def flush_line() -> None:
        nonlocal current, pen
        lines.append(current)
        widths.append(max_width - pen)
        current = []
        pen = max_width

    def place_cluster(cluster: _Cluster) -> None:
        nonlocal pen
        if current and pen - cluster.advance < 0:
            flush_line()
        x = pen - cluster.advance
        y = line_y()
        current.append(PositionedGlyph(cluster.base, x, y, color))
        for mark in cluster.marks:
            current.append(PositionedGlyph(mark, x, y, color))
        pen = x

    for gap, clusters in words:
        if current:
            needed = gap * atlas.space_width + _word_width(clusters)
            if needed <= pen:
                pen -= gap * atlas.space_width
            else:
                flush_line()
        for cluster in clusters:
            place_cluster(cluster)
    flush_line()

    return LayoutResult(
        lines=tuple(tuple(line) for line in lines),
        total_height=len(lines) * atlas.line_height,
        max_line_width=max(widths, default=0),
    )


def measure(atlas: GlyphAtlas, text: str) -> int:
    """Width in pixels of ``text`` on a single unbounded line."""
    return sum(
        gap * atlas.space_width + _word_width(clusters)
        for gap, clusters in _shaped_words(atlas, text)
    )
