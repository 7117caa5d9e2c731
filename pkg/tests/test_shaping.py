import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contentforge.glyphs import (
    REPLACEMENT_CODEPOINT,
    GlyphForm,
    JoiningClass,
    generate_test_font,
)
from contentforge.shaping import (
    DEFAULT_ARABIC_JOINING,
    joining_class,
    measure,
    resolve_form,
    shape_text,
)

D = JoiningClass.DUAL
R = JoiningClass.RIGHT
N = JoiningClass.NON_JOINING
ISO = GlyphForm.ISOLATED
INI = GlyphForm.INITIAL
MED = GlyphForm.MEDIAL
FIN = GlyphForm.FINAL

# Hand-checked oracle: every (prev, this, next) combination and the form it
# must produce. prev/next None marks a word edge.
TRUTH_TABLE = {
    # this is Dual: joins back iff prev is Dual, joins forward iff next exists
    # and can receive (Dual or Right).
    (None, D, None): ISO, (None, D, D): INI, (None, D, R): INI, (None, D, N): ISO,
    (D, D, None): FIN,    (D, D, D): MED,    (D, D, R): MED,    (D, D, N): FIN,
    (R, D, None): ISO,    (R, D, D): INI,    (R, D, R): INI,    (R, D, N): ISO,
    (N, D, None): ISO,    (N, D, D): INI,    (N, D, R): INI,    (N, D, N): ISO,
    # this is Right: never joins forward; joins back iff prev is Dual.
    (None, R, None): ISO, (None, R, D): ISO, (None, R, R): ISO, (None, R, N): ISO,
    (D, R, None): FIN,    (D, R, D): FIN,    (D, R, R): FIN,    (D, R, N): FIN,
    (R, R, None): ISO,    (R, R, D): ISO,    (R, R, R): ISO,    (R, R, N): ISO,
    (N, R, None): ISO,    (N, R, D): ISO,    (N, R, R): ISO,    (N, R, N): ISO,
    # this is NonJoining: always isolated.
    (None, N, None): ISO, (None, N, D): ISO, (None, N, R): ISO, (None, N, N): ISO,
    (D, N, None): ISO,    (D, N, D): ISO,    (D, N, R): ISO,    (D, N, N): ISO,
    (R, N, None): ISO,    (R, N, D): ISO,    (R, N, R): ISO,    (R, N, N): ISO,
    (N, N, None): ISO,    (N, N, D): ISO,    (N, N, R): ISO,    (N, N, N): ISO,
}

# Six-letter test alphabet: two of each class.
ALPHABET = {
    "ب": D,  # BEH
    "س": D,  # SEEN
    "ا": R,  # ALEF
    "د": R,  # DAL
    "ء": N,  # HAMZA
    "7": N,
}


@pytest.fixture(scope="module")
def atlas():
    return generate_test_font(sorted((ord(c), cls) for c, cls in ALPHABET.items()))


def test_truth_table_is_exhaustive():
    combos = list(itertools.product([None, D, R, N], [D, R, N], [None, D, R, N]))
    assert len(combos) == 48
    assert set(TRUTH_TABLE) == set(combos)


def test_resolve_form_matches_truth_table():
    for (prev, this, nxt), expected in TRUTH_TABLE.items():
        assert resolve_form(prev, this, nxt) is expected, (prev, this, nxt)


def test_right_joining_letters_never_take_initial_or_medial():
    for prev in (None, D, R, N):
        for nxt in (None, D, R, N):
            assert resolve_form(prev, R, nxt) in (ISO, FIN)
            assert resolve_form(prev, N, nxt) is ISO


def _shaped_forms(atlas, word: str) -> list[GlyphForm]:
    layout = shape_text(atlas, word, None)
    return [pg.form for line in layout.lines for pg in line]


def _oracle_forms(word: str) -> list[GlyphForm]:
    classes = [ALPHABET[c] for c in word]
    out = []
    for i, cls in enumerate(classes):
        prev = classes[i - 1] if i > 0 else None
        nxt = classes[i + 1] if i + 1 < len(classes) else None
        out.append(TRUTH_TABLE[(prev, cls, nxt)])
    return out


def test_all_words_up_to_length_four_match_oracle(atlas):
    letters = sorted(ALPHABET)
    count = 0
    for length in range(1, 5):
        for word in itertools.product(letters, repeat=length):
            word = "".join(word)
            assert _shaped_forms(atlas, word) == _oracle_forms(word), word
            count += 1
    assert count == 6 + 36 + 216 + 1296


def test_three_letter_dual_word_layout(atlas):
    word = "بسب"
    layout = shape_text(atlas, word, 200)
    assert len(layout.lines) == 1
    line = layout.lines[0]
    assert [pg.form for pg in line] == [INI, MED, FIN]
    # Right-to-left: first letter sits rightmost, its box ending at the edge.
    assert line[0].x > line[1].x > line[2].x
    assert line[0].x + line[0].glyph.advance == 200


def test_empty_string(atlas):
    layout = shape_text(atlas, "", 100)
    assert layout.lines == ()
    assert layout.total_height == 0
    assert layout.max_line_width == 0
    assert measure(atlas, "") == 0
    assert measure(atlas, "   ") == 0


def test_single_glyph_measure(atlas):
    glyph = atlas.lookup(ord("7"), ISO)
    assert measure(atlas, "7") == glyph.advance


def test_two_words_wrap_to_second_line(atlas):
    word = "بسب"
    width = measure(atlas, word) + atlas.space_width  # too small for both words
    layout = shape_text(atlas, f"{word} {word}", width)
    assert len(layout.lines) == 2
    assert layout.max_line_width <= width
    assert layout.total_height == 2 * atlas.line_height


def test_line_positions_stack_at_line_height(atlas):
    word = "بس"
    width = measure(atlas, word)
    layout = shape_text(atlas, f"{word} {word} {word}", width)
    assert [line[0].y for line in layout.lines] == [
        i * atlas.line_height for i in range(len(layout.lines))
    ]


def test_oversize_word_breaks_between_glyphs_keeping_forms(atlas):
    word = "ب" * 10
    single = _shaped_forms(atlas, word)
    width = atlas.lookup(ord("ب"), MED).advance * 3 + 1
    layout = shape_text(atlas, word, width)
    assert len(layout.lines) > 1
    broken = [pg.form for line in layout.lines for pg in line]
    assert broken == single  # forms resolved once, before breaking


def test_unknown_codepoints_fall_back_to_replacement(atlas):
    layout = shape_text(atlas, "中文", 100)
    glyphs = [pg for line in layout.lines for pg in line]
    assert glyphs
    assert all(pg.codepoint == REPLACEMENT_CODEPOINT for pg in glyphs)


def test_missing_form_falls_back_to_isolated(atlas):
    # A Right-joining letter has no Initial form; asking for one comes back
    # isolated rather than failing.
    glyph = atlas.lookup(ord("ا"), INI)
    assert glyph.codepoint == ord("ا")
    assert glyph.form is ISO


def test_space_between_words_keeps_forms(atlas):
    left, right = "بس", "سب"
    combined = _shaped_forms(atlas, f"{left} {right}")
    assert combined == _shaped_forms(atlas, left) + _shaped_forms(atlas, right)


def test_diacritics_are_transparent_and_zero_advance():
    alphabet = sorted((ord(c), cls) for c, cls in ALPHABET.items())
    alphabet.append((0x064E, N))  # FATHA, a combining vowel mark
    atlas = generate_test_font(alphabet)
    plain = "بسب"
    marked = "بَسب"
    plain_layout = shape_text(atlas, plain, 200)
    marked_layout = shape_text(atlas, marked, 200)
    base = [(pg.codepoint, pg.form, pg.x) for pg in plain_layout.lines[0]
            if pg.codepoint != 0x064E]
    marked_base = [(pg.codepoint, pg.form, pg.x) for pg in marked_layout.lines[0]
                   if pg.codepoint != 0x064E]
    assert base == marked_base  # letters still join across the mark
    marks = [pg for pg in marked_layout.lines[0] if pg.codepoint == 0x064E]
    assert len(marks) == 1
    beh_x = marked_layout.lines[0][0].x
    assert marks[0].x == beh_x  # overdrawn at its base letter's position
    assert measure(atlas, marked) == measure(atlas, plain)


def test_absent_diacritic_is_skipped(atlas):
    assert measure(atlas, "بَ") == measure(atlas, "ب")


# -- wrap safety and measure agreement --------------------------------------

TEXT_CHARS = sorted(ALPHABET) + [" "]


@st.composite
def text_and_width(draw):
    text = "".join(draw(st.lists(st.sampled_from(TEXT_CHARS), max_size=60)))
    width = draw(st.integers(10, 120))
    return text, width


@given(text_and_width())
@settings(max_examples=300, deadline=None)
def test_wrap_safety(atlas_width):
    atlas = _MODULE_ATLAS
    text, width = atlas_width
    width = max(width, atlas.max_advance())
    layout = shape_text(atlas, text, width)
    for line in layout.lines:
        assert line
        left = min(pg.x for pg in line)
        right = max(pg.x + pg.glyph.advance for pg in line)
        assert left >= 0
        assert right <= width
        assert right - left <= width
    assert layout.max_line_width <= width


@given(st.lists(st.sampled_from(TEXT_CHARS), max_size=60))
@settings(max_examples=200, deadline=None)
def test_measure_equals_unbounded_layout_width(chars):
    atlas = _MODULE_ATLAS
    text = "".join(chars)
    layout = shape_text(atlas, text, None)
    assert measure(atlas, text) == layout.max_line_width
    assert len(layout.lines) <= 1


_MODULE_ATLAS = generate_test_font(sorted((ord(c), cls) for c, cls in ALPHABET.items()))


# -- shipped default joining table -------------------------------------------

# Independent transcription of the standard joining types for the shipped
# subset: letters whose presentation repertoire has only isolated and final
# shapes join rightward; the rest of the letters join on both sides.
RIGHT_JOINING_CHARS = set("آأؤإاةدذ"
                          "رزوڈڑژںے")
DUAL_JOINING_CHARS = set("ئبتثجحخس"
                         "شصضطظعغف"
                         "قكلمنهيٹ"
                         "پچکگی")
NON_JOINING_CHARS = {"ء"}


def test_default_table_matches_transcribed_joining_types():
    expected = {}
    for ch in RIGHT_JOINING_CHARS:
        expected[ord(ch)] = R
    for ch in DUAL_JOINING_CHARS:
        expected[ord(ch)] = D
    for ch in NON_JOINING_CHARS:
        expected[ord(ch)] = N
    assert DEFAULT_ARABIC_JOINING == expected


def test_joining_class_lookups(fixture_atlas):
    assert joining_class(fixture_atlas, 0x0628) is D       # BEH
    assert joining_class(fixture_atlas, 0x0627) is R       # ALEF
    assert joining_class(fixture_atlas, ord("3")) is N     # digits never join
    assert joining_class(fixture_atlas, 0x2603) is N       # absent defaults
