"""Bitmap glyph atlas: glyph storage, the MCFN font codec, procedural test fonts.

font.bin layout (big-endian):

  "MCFN" | version:u16=1 | line_height:u8 | baseline:u8 | space_width:u8
  | joining_count:u16 | joining_count x { codepoint:u32 | class:u8 }
  | glyph_count:u16   | glyph_count x   { codepoint:u32 | form:u8
        | width:u8 | height:u8 | x_bearing:i8 | y_bearing:i8 | advance:u8
        | bitmap: height x ceil(width/8) bytes }

Joining classes on the wire: 0 = NonJoining, 1 = Right, 2 = Dual.
Glyph bitmaps are 1 bit per pixel, row-major, MSB first, each row padded
to a whole byte. The replacement glyph is the entry with codepoint
0xFFFFFFFF, form 0, and must be present in every font.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .wire import ByteParser, ByteWriter, CodecError

FONT_MAGIC = b"MCFN"
FONT_VERSION = 1

REPLACEMENT_CODEPOINT = 0xFFFFFFFF


class JoiningClass(Enum):
    """How a letter connects to its neighbours in cursive script."""

    NON_JOINING = 0
    RIGHT = 1
    DUAL = 2


class GlyphForm(Enum):
    """Contextual presentation form; the numeric value is the wire tag."""

    ISOLATED = 0
    INITIAL = 1
    MEDIAL = 2
    FINAL = 3


# Forms a glyph set must provide for a codepoint of the given class.
FORMS_FOR_CLASS: dict[JoiningClass, tuple[GlyphForm, ...]] = {
    JoiningClass.DUAL: (GlyphForm.ISOLATED, GlyphForm.INITIAL, GlyphForm.MEDIAL, GlyphForm.FINAL),
    JoiningClass.RIGHT: (GlyphForm.ISOLATED, GlyphForm.FINAL),
    JoiningClass.NON_JOINING: (GlyphForm.ISOLATED,),
}


def row_bytes(width: int) -> int:
    return (width + 7) // 8


@dataclass(frozen=True)
class Glyph:
    """One bitmap glyph. ``bitmap`` holds height x ceil(width/8) packed bytes."""

    codepoint: int
    form: GlyphForm
    width: int
    height: int
    x_bearing: int
    y_bearing: int
    advance: int
    bitmap: bytes

    def pixel(self, x: int, y: int) -> bool:
        if not (0 <= x < self.width and 0 <= y < self.height):
            return False
        byte = self.bitmap[y * row_bytes(self.width) + x // 8]
        return bool(byte & (0x80 >> (x % 8)))

    def expected_bitmap_len(self) -> int:
        return self.height * row_bytes(self.width)


@dataclass(frozen=True)
class GlyphAtlas:
    """Immutable bitmap font: metrics, glyphs by (codepoint, form), joining table."""

    line_height: int
    baseline: int
    space_width: int
    replacement_glyph: Glyph
    glyphs: Mapping[tuple[int, GlyphForm], Glyph]
    joining_table: Mapping[int, JoiningClass]

    def lookup(self, codepoint: int, form: GlyphForm) -> Glyph:
        """Find a glyph, falling back to the isolated form, then the replacement."""
        glyph = self.glyphs.get((codepoint, form))
        if glyph is None:
            glyph = self.glyphs.get((codepoint, GlyphForm.ISOLATED))
        if glyph is None:
            glyph = self.replacement_glyph
        return glyph

    def has_codepoint(self, codepoint: int) -> bool:
        return any((codepoint, form) in self.glyphs for form in GlyphForm)

    def max_advance(self) -> int:
        widest = self.replacement_glyph.advance
        for glyph in self.glyphs.values():
            widest = max(widest, glyph.advance)
        return widest


class FontError(CodecError):
    """Raised for malformed font data or inconsistent atlases."""


def encode_font(atlas: GlyphAtlas) -> bytes:
    """Serialize an atlas; output is deterministic for equal atlases."""
    w = ByteWriter()
    w.raw(FONT_MAGIC)
    w.u16(FONT_VERSION)
    w.u8(atlas.line_height)
    w.u8(atlas.baseline)
    w.u8(atlas.space_width)
    joining = sorted(atlas.joining_table.items())
    w.u16(len(joining))
    for codepoint, cls in joining:
        w.u32(codepoint)
        w.u8(cls.value)
    entries = sorted(atlas.glyphs.items(), key=lambda kv: (kv[0][0], kv[0][1].value))
    entries.append(((REPLACEMENT_CODEPOINT, GlyphForm.ISOLATED), atlas.replacement_glyph))
    w.u16(len(entries))
    for (codepoint, form), glyph in entries:
        if len(glyph.bitmap) != glyph.expected_bitmap_len():
            raise FontError(
                f"glyph U+{codepoint:04X}/{form.name}: bitmap has {len(glyph.bitmap)} bytes, "
                f"expected {glyph.expected_bitmap_len()}"
            )
        w.u32(codepoint)
        w.u8(form.value)
        w.u8(glyph.width)
        w.u8(glyph.height)
        w.i8(glyph.x_bearing)
        w.i8(glyph.y_bearing)
        w.u8(glyph.advance)
        w.raw(glyph.bitmap)
    return w.getvalue()


def decode_font(data: bytes) -> GlyphAtlas:
    p = ByteParser(data)
    try:
        p.expect_magic(FONT_MAGIC)
    except CodecError:
        raise FontError(f"bad magic: not an {FONT_MAGIC.decode()} font file") from None
    version = p.u16()
    if version != FONT_VERSION:
        raise FontError(f"unsupported font version {version}")
    line_height = p.u8()
    baseline = p.u8()
    space_width = p.u8()
    joining: dict[int, JoiningClass] = {}
    for _ in range(p.u16()):
        codepoint = p.u32()
        raw = p.u8()
        try:
            joining[codepoint] = JoiningClass(raw)
        except ValueError:
            raise FontError(f"unknown joining class {raw} for U+{codepoint:04X}") from None
    glyphs: dict[tuple[int, GlyphForm], Glyph] = {}
    replacement: Glyph | None = None
    glyph_count = p.u16()
    for index in range(glyph_count):
        try:
            codepoint = p.u32()
            raw_form = p.u8()
            try:
                form = GlyphForm(raw_form)
            except ValueError:
                raise FontError(f"unknown glyph form {raw_form}") from None
            width = p.u8()
            height = p.u8()
            x_bearing = p.i8()
            y_bearing = p.i8()
            advance = p.u8()
            bitmap = p.take(height * row_bytes(width))
        except CodecError as exc:
            raise FontError(f"glyph {index}: {exc}") from None
        glyph = Glyph(codepoint, form, width, height, x_bearing, y_bearing, advance, bitmap)
        if codepoint == REPLACEMENT_CODEPOINT and form is GlyphForm.ISOLATED:
            replacement = glyph
        else:
            glyphs[(codepoint, form)] = glyph
    if not p.at_end():
        raise FontError(f"{p.remaining} trailing bytes after the last glyph")
    if replacement is None:
        raise FontError("font has no replacement glyph (codepoint 0xFFFFFFFF, form 0)")
    atlas = GlyphAtlas(line_height, baseline, space_width, replacement, glyphs, joining)
    _check_form_coverage(atlas)
    return atlas


def _check_form_coverage(atlas: GlyphAtlas) -> None:
    present = {cp for cp, _form in atlas.glyphs}
    for codepoint in present:
        cls = atlas.joining_table.get(codepoint, JoiningClass.NON_JOINING)
        for form in FORMS_FOR_CLASS[cls]:
            if (codepoint, form) not in atlas.glyphs:
                raise FontError(
                    f"U+{codepoint:04X} is {cls.name} but lacks its {form.name} form"
                )


# ---------------------------------------------------------------------------
# Procedural test fonts


def _pattern_bits(codepoint: int, form: GlyphForm, n: int) -> list[bool]:
    """Deterministic, platform-stable pseudo-random bits for one glyph."""
    digest = hashlib.sha256(struct.pack(">IB", codepoint, form.value)).digest()
    return [bool(digest[i // 8] & (0x80 >> (i % 8))) for i in range(n)]


def _build_bitmap(width: int, height: int, set_pixels: set[tuple[int, int]]) -> bytes:
    stride = row_bytes(width)
    buf = bytearray(height * stride)
    for x, y in set_pixels:
        buf[y * stride + x // 8] |= 0x80 >> (x % 8)
    return bytes(buf)


def _test_glyph(codepoint: int, form: GlyphForm) -> Glyph:
    # Width varies with the codepoint so layout tests see mixed advances.
    width = 6 + codepoint % 3
    height = 10
    connector_row = 5
    pixels: set[tuple[int, int]] = set()
    bits = _pattern_bits(codepoint, form, (width - 2) * 6)
    i = 0
    for y in range(2, 8):
        for x in range(1, width - 1):
            if bits[i]:
                pixels.add((x, y))
            i += 1
    # Cursive connectors: a joined edge gets a stroke at the connector row.
    # In right-to-left layout the previous letter sits to the right, the
    # next letter to the left.
    if form in (GlyphForm.FINAL, GlyphForm.MEDIAL):
        pixels.add((width - 1, connector_row))
    if form in (GlyphForm.INITIAL, GlyphForm.MEDIAL):
        pixels.add((0, connector_row))
    return Glyph(
        codepoint=codepoint,
        form=form,
        width=width,
        height=height,
        x_bearing=0,
        y_bearing=1,
        advance=width + 1,
        bitmap=_build_bitmap(width, height, pixels),
    )


def _replacement_glyph() -> Glyph:
    # Hollow box, the classic "no glyph" marker.
    width, height = 8, 10
    pixels = set()
    for x in range(width):
        pixels.add((x, 0))
        pixels.add((x, height - 1))
    for y in range(height):
        pixels.add((0, y))
        pixels.add((width - 1, y))
    return Glyph(
        codepoint=REPLACEMENT_CODEPOINT,
        form=GlyphForm.ISOLATED,
        width=width,
        height=height,
        x_bearing=0,
        y_bearing=1,
        advance=width + 1,
        bitmap=_build_bitmap(width, height, pixels),
    )


def generate_test_font(
    alphabet: Iterable[tuple[int, JoiningClass]],
    line_height: int = 12,
    baseline: int = 9,
    space_width: int = 4,
) -> GlyphAtlas:
    """Build a deterministic atlas covering ``alphabet``.

    Every codepoint receives the forms its joining class requires, each with
    a distinct procedural bitmap (joined edges carry connector strokes), so
    shaping and rendering can be exercised without a real rasterizer.
    """
    pairs = list(alphabet)
    if not pairs:
        raise FontError("alphabet must not be empty")
    seen: set[int] = set()
    joining: dict[int, JoiningClass] = {}
    glyphs: dict[tuple[int, GlyphForm], Glyph] = {}
    for codepoint, cls in pairs:
        if codepoint in seen:
            raise FontError(f"duplicate codepoint U+{codepoint:04X} in alphabet")
        seen.add(codepoint)
        joining[codepoint] = cls
        for form in FORMS_FOR_CLASS[cls]:
            glyphs[(codepoint, form)] = _test_glyph(codepoint, form)
    return GlyphAtlas(
        line_height=line_height,
        baseline=baseline,
        space_width=space_width,
        replacement_glyph=_replacement_glyph(),
        glyphs=glyphs,
        joining_table=joining,
    )
