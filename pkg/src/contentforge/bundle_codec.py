"""Binary bundle files: index, content, theme, and bounded-read page access.

A compiled bundle is four files plus the referenced assets. All integers
are big-endian; string16/string32 are length-prefixed UTF-8 (u16/u32).

index.bin:
  "MCIX" | version:u16=1 | page_count:u32 | page_count x {
      page_id:u32 | parent_id:u32 | child_count:u16 | title:string16
      | content_offset:u64 | content_length:u32 }

content.bin:
  "MCCT" | version:u16=1 | page_count:u32 | payload area. Offsets in the
  index are relative to the payload start. Each page region is
  record_count:u16 followed by its records:
      kind:u8, then
        Text(0):   color_index:u8 | font_id:u8 | text:string32
        Image(1), Audio(2), Video(3): asset_ref:string16 | caption:string16
        Phone(4), Email(5), WebLink(6): value:string16 | label:string16

theme.bin:
  "MCTH" | version:u16=1 | flags:u8 | background,text,highlight,header as
  (r,g,b:u8) | palette_count:u8 | palette_count x (r,g,b) |
  splash_image:string16 | background_image:string16 |
  background_music:string16. Flag bits: 0 splash, 1 background music,
  2 background image; a string is empty when its flag is clear.

The index stores each page's byte position and length inside the content
payload, so one page can be retrieved by skipping everything before it and
reading exactly its region: the bounded-read contract.
"""

from __future__ import annotations

import os
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .content_model import (
    ContentItem,
    ContentKind,
    ProjectManifest,
    Theme,
    ValidationReport,
    flatten,
)
from .glyphs import GlyphAtlas, encode_font
from .wire import ByteParser, ByteSource, ByteWriter, CodecError

INDEX_MAGIC = b"MCIX"
CONTENT_MAGIC = b"MCCT"
THEME_MAGIC = b"MCTH"
BUNDLE_VERSION = 1

# magic + version + page_count
CONTENT_HEADER_SIZE = 10

# A decoded record is just a ContentItem; the wire form adds nothing.
ContentRecord = ContentItem

VerificationReport = ValidationReport


class UnknownPageError(KeyError):
    """Raised when a page id is not present in the bundle index."""


@dataclass(frozen=True)
class IndexEntry:
    page_id: int
    parent_id: int
    child_count: int
    title: str
    content_offset: int
    content_length: int


@dataclass(frozen=True)
class BundleIndex:
    version: int
    entries: tuple[IndexEntry, ...]

    def entry(self, page_id: int) -> IndexEntry:
        for entry in self.entries:
            if entry.page_id == page_id:
                return entry
        raise UnknownPageError(page_id)

    def has_page(self, page_id: int) -> bool:
        return any(e.page_id == page_id for e in self.entries)


@dataclass
class BundleFiles:
    """The four bundle byte sequences plus the asset payloads."""

    index_bytes: bytes
    content_bytes: bytes
    theme_bytes: bytes
    font_bytes: bytes
    assets: dict[str, bytes] = field(default_factory=dict)


def encode_record(w: ByteWriter, item: ContentItem) -> None:
    w.u8(item.kind.value)
    if item.kind is ContentKind.TEXT:
        w.u8(item.color_index)
        w.u8(item.font_id)
        w.string32(item.text)
    elif item.kind in (ContentKind.IMAGE, ContentKind.AUDIO, ContentKind.VIDEO):
        w.string16(item.asset_ref)
        w.string16(item.caption)
    else:
        w.string16(item.value)
        w.string16(item.label)


def decode_record(p: ByteParser) -> ContentItem:
    tag = p.u8()
    try:
        kind = ContentKind(tag)
    except ValueError:
        raise CodecError(f"unknown record kind tag {tag}") from None
    if kind is ContentKind.TEXT:
        color_index = p.u8()
        font_id = p.u8()
        return ContentItem.text_item(p.string32(), color_index, font_id)
    if kind in (ContentKind.IMAGE, ContentKind.AUDIO, ContentKind.VIDEO):
        return ContentItem.media_item(kind, p.string16(), p.string16())
    return ContentItem.contact_item(kind, p.string16(), p.string16())


def encode_page_region(items: tuple[ContentItem, ...]) -> bytes:
    w = ByteWriter()
    w.u16(len(items))
    for item in items:
        encode_record(w, item)
    return w.getvalue()


def decode_page_region(data: bytes) -> list[ContentItem]:
    """Decode one page region; the records must fill it exactly."""
    p = ByteParser(data)
    count = p.u16()
    records = [decode_record(p) for _ in range(count)]
    if not p.at_end():
        raise CodecError(
            f"page region length mismatch: {p.remaining} bytes left after "
            f"{count} records"
        )
    return records


def _checked_codepoints(manifest: ProjectManifest, atlas: GlyphAtlas):
    for page, _parent in flatten(manifest):
        texts = [page.title] + [i.text for i in page.items if i.kind is ContentKind.TEXT]
        for text in texts:
            for ch in text:
                if ch == " " or unicodedata.combining(ch):
                    continue
                yield page.page_id, ord(ch)


def encode_bundle(
    manifest: ProjectManifest,
    atlas: GlyphAtlas,
    assets: Mapping[str, bytes],
) -> BundleFiles:
    """Serialize a validated manifest into deterministic bundle files.

    Identical inputs always produce byte-identical files. Raises CodecError
    when a codepoint cannot be drawn and the atlas has no replacement
    glyph, or if content offsets would overflow their u64 field.
    """
    if atlas.replacement_glyph is None:
        for page_id, codepoint in _checked_codepoints(manifest, atlas):
            if not atlas.has_codepoint(codepoint):
                raise CodecError(
                    f"page {page_id}: codepoint U+{codepoint:04X} has no glyph "
                    "and the atlas has no replacement glyph"
                )

    flat = flatten(manifest)
    index_w = ByteWriter()
    index_w.raw(INDEX_MAGIC)
    index_w.u16(BUNDLE_VERSION)
    index_w.u32(len(flat))

    content_w = ByteWriter()
    content_w.raw(CONTENT_MAGIC)
    content_w.u16(BUNDLE_VERSION)
    content_w.u32(len(flat))

    offset = 0
    for page, parent_id in flat:
        region = encode_page_region(page.items)
        if offset + len(region) >= 1 << 64:
            raise CodecError("content offset overflows u64")
        index_w.u32(page.page_id)
        index_w.u32(parent_id)
        index_w.u16(len(page.children))
        index_w.string16(page.title)
        index_w.u64(offset)
        index_w.u32(len(region))
        content_w.raw(region)
        offset += len(region)

    return BundleFiles(
        index_bytes=index_w.getvalue(),
        content_bytes=content_w.getvalue(),
        theme_bytes=encode_theme(manifest.theme),
        font_bytes=encode_font(atlas),
        assets=dict(sorted(assets.items())),
    )


def decode_index(data: bytes) -> BundleIndex:
    p = ByteParser(data)
    p.expect_magic(INDEX_MAGIC)
    version = p.u16()
    if version != BUNDLE_VERSION:
        raise CodecError(f"unsupported index version {version}")
    count = p.u32()
    entries: list[IndexEntry] = []
    seen: set[int] = set()
    for _ in range(count):
        entry = IndexEntry(
            page_id=p.u32(),
            parent_id=p.u32(),
            child_count=p.u16(),
            title=p.string16(),
            content_offset=p.u64(),
            content_length=p.u32(),
        )
        if entry.page_id in seen:
            raise CodecError(f"duplicate page id {entry.page_id} in index")
        seen.add(entry.page_id)
        entries.append(entry)
    if not p.at_end():
        raise CodecError(f"{p.remaining} trailing bytes after the last index entry")
    expected = 0
    for entry in entries:
        if entry.content_offset < expected:
            raise CodecError(
                f"non-monotone content offsets: page {entry.page_id} at "
                f"{entry.content_offset} after byte {expected}"
            )
        if entry.content_offset != expected:
            raise CodecError(
                f"non-contiguous content regions: page {entry.page_id} starts at "
                f"{entry.content_offset}, expected {expected}"
            )
        expected = entry.content_offset + entry.content_length
    return BundleIndex(version=version, entries=tuple(entries))


def read_content_header(reader: ByteSource) -> int:
    """Consume and validate the content header; returns the page count."""
    header = reader.read(CONTENT_HEADER_SIZE)
    if len(header) < CONTENT_HEADER_SIZE:
        raise CodecError("content file shorter than its header")
    p = ByteParser(header)
    p.expect_magic(CONTENT_MAGIC)
    version = p.u16()
    if version != BUNDLE_VERSION:
        raise CodecError(f"unsupported content version {version}")
    return p.u32()


def read_page(reader: ByteSource, index: BundleIndex, page_id: int) -> list[ContentItem]:
    """Retrieve one page's records without reading the pages before it.

    The reader must be positioned at the start of the content file. Bytes
    before the target region are skipped, not read: a counting reader sees
    at most header + content_length bytes read, regardless of where the
    page sits in the file.
    """
    entry = index.entry(page_id)
    read_content_header(reader)
    if entry.content_offset:
        reader.skip(entry.content_offset)
    region = reader.read(entry.content_length)
    if len(region) < entry.content_length:
        raise CodecError(
            f"page {page_id}: content truncated (wanted {entry.content_length} "
            f"bytes, got {len(region)})"
        )
    try:
        return decode_page_region(region)
    except CodecError as exc:
        raise CodecError(f"page {page_id}: {exc}") from None


def encode_theme(theme: Theme) -> bytes:
    if not (1 <= len(theme.text_palette) <= 255):
        raise CodecError(f"palette must have 1..255 entries, got {len(theme.text_palette)}")
    if theme.splash_enabled and not theme.splash_image:
        raise CodecError("splash_enabled without a splash_image reference")
    w = ByteWriter()
    w.raw(THEME_MAGIC)
    w.u16(BUNDLE_VERSION)
    flags = 0
    if theme.splash_enabled:
        flags |= 0x01
    if theme.background_music:
        flags |= 0x02
    if theme.background_image:
        flags |= 0x04
    w.u8(flags)
    for color in (theme.background, theme.text_default, theme.highlight, theme.header):
        for channel in color:
            w.u8(channel)
    w.u8(len(theme.text_palette))
    for color in theme.text_palette:
        for channel in color:
            w.u8(channel)
    w.string16(theme.splash_image if theme.splash_enabled else "")
    w.string16(theme.background_image or "")
    w.string16(theme.background_music or "")
    return w.getvalue()


def decode_theme(data: bytes) -> Theme:
    p = ByteParser(data)
    p.expect_magic(THEME_MAGIC)
    version = p.u16()
    if version != BUNDLE_VERSION:
        raise CodecError(f"unsupported theme version {version}")
    flags = p.u8()

    def rgb() -> tuple[int, int, int]:
        return (p.u8(), p.u8(), p.u8())

    background, text_default, highlight, header = rgb(), rgb(), rgb(), rgb()
    palette_count = p.u8()
    if palette_count == 0:
        raise CodecError("theme palette is empty")
    palette = tuple(rgb() for _ in range(palette_count))
    splash_image = p.string16()
    background_image = p.string16()
    background_music = p.string16()
    if not p.at_end():
        raise CodecError(f"{p.remaining} trailing bytes after the theme record")
    splash_enabled = bool(flags & 0x01)
    if splash_enabled and not splash_image:
        raise CodecError("splash flag set but no splash_image reference")
    if not splash_enabled and splash_image:
        raise CodecError("splash_image present but splash flag clear")
    if bool(flags & 0x02) != bool(background_music):
        raise CodecError("background music flag does not match its field")
    if bool(flags & 0x04) != bool(background_image):
        raise CodecError("background image flag does not match its field")
    return Theme(
        background=background,
        text_default=text_default,
        highlight=highlight,
        header=header,
        text_palette=palette,
        splash_enabled=splash_enabled,
        splash_image=splash_image or None,
        background_image=background_image or None,
        background_music=background_music or None,
    )


def iter_asset_refs(records: list[ContentItem]) -> list[str]:
    return [
        item.asset_ref
        for item in records
        if item.kind in (ContentKind.IMAGE, ContentKind.AUDIO, ContentKind.VIDEO)
    ]


def verify_bundle(files: BundleFiles) -> VerificationReport:
    """Cross-check the four files and the asset map; findings are data."""
    report = VerificationReport()

    try:
        index = decode_index(files.index_bytes)
    except CodecError as exc:
        report.add("bad-index", f"index: {exc}")
        return report

    versions = {"index": index.version}
    payload = files.content_bytes[CONTENT_HEADER_SIZE:]
    try:
        p = ByteParser(files.content_bytes)
        p.expect_magic(CONTENT_MAGIC)
        versions["content"] = p.u16()
        page_count = p.u32()
        if page_count != len(index.entries):
            report.add("count-mismatch",
                       f"content header lists {page_count} pages, index has {len(index.entries)}")
    except CodecError as exc:
        report.add("bad-content", f"content: {exc}")
        return report

    needed_assets: set[str] = set()
    for entry in index.entries:
        region = payload[entry.content_offset:entry.content_offset + entry.content_length]
        if len(region) != entry.content_length:
            report.add("region-mismatch",
                       f"page {entry.page_id}: region extends past the content file",
                       page_id=entry.page_id)
            continue
        try:
            records = decode_page_region(region)
        except CodecError as exc:
            report.add("region-mismatch", f"page {entry.page_id}: {exc}", page_id=entry.page_id)
            continue
        needed_assets.update(iter_asset_refs(records))
    total = sum(e.content_length for e in index.entries)
    if total != len(payload):
        report.add("payload-size",
                   f"content payload is {len(payload)} bytes, index regions cover {total}")

    try:
        theme = decode_theme(files.theme_bytes)
        versions["theme"] = BUNDLE_VERSION
        for ref in (theme.splash_image, theme.background_image, theme.background_music):
            if ref:
                needed_assets.add(ref)
    except CodecError as exc:
        report.add("bad-theme", f"theme: {exc}")

    try:
        from .glyphs import decode_font

        decode_font(files.font_bytes)
        versions["font"] = BUNDLE_VERSION
    except CodecError as exc:
        report.add("bad-font", f"font: {exc}")

    if len(set(versions.values())) > 1:
        report.add("version-mismatch", f"bundle file versions disagree: {versions}")

    for ref in sorted(needed_assets):
        if ref not in files.assets:
            report.add("missing-asset", f"referenced asset {ref!r} is not in the bundle")
    return report


BUNDLE_FILE_NAMES = ("index.bin", "content.bin", "theme.bin", "font.bin")


def write_bundle_dir(files: BundleFiles, out_dir: str | Path) -> None:
    """Write the four bundle files plus assets/ under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, data in zip(
        BUNDLE_FILE_NAMES,
        (files.index_bytes, files.content_bytes, files.theme_bytes, files.font_bytes),
    ):
        (out / name).write_bytes(data)
    for ref, data in files.assets.items():
        path = out / "assets" / ref
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)


def load_bundle_dir(bundle_dir: str | Path) -> BundleFiles:
    """Read a bundle directory written by write_bundle_dir back into memory."""
    root = Path(bundle_dir)
    blobs = []
    for name in BUNDLE_FILE_NAMES:
        path = root / name
        if not path.is_file():
            raise CodecError(f"bundle file missing: {path}")
        blobs.append(path.read_bytes())
    assets: dict[str, bytes] = {}
    asset_root = root / "assets"
    if asset_root.is_dir():
        for dirpath, _dirnames, filenames in os.walk(asset_root):
            for filename in sorted(filenames):
                full = Path(dirpath) / filename
                ref = full.relative_to(asset_root).as_posix()
                assets[ref] = full.read_bytes()
    return BundleFiles(*blobs, assets=dict(sorted(assets.items())))
