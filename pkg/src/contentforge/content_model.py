"""Authored content domain: page trees, typed content items, themes.

A project is described by a UTF-8 JSON manifest:

    {
      "title": "...", "version": "...",
      "font_source": "font.json", "asset_dir": "assets",
      "theme": {
        "colors": {"background": "#RRGGBB", "text": "#RRGGBB",
                   "highlight": "#RRGGBB", "header": "#RRGGBB"},
        "palette": ["#RRGGBB", ...],
        "splash_enabled": false,
        "splash_image": null, "background_image": null,
        "background_music": null
      },
      "pages": [
        {"id": 1, "title": "...", "items": [...], "children": [...]}
      ]
    }

Items carry a "kind" plus kind-specific fields: text items have "text",
"color_index" and "font_id"; image/audio/video items have "asset_ref" and
an optional "caption"; phone/email/weblink items have "value" and an
optional "label".

The order of pages and of items within a page is significant and is
preserved through every later stage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Collection, Iterator

# Sentinel parent id for root pages. Page ids are unsigned 32-bit values and
# 0 remains a legal page id, so the all-ones value marks "no parent".
ROOT_PARENT = 0xFFFFFFFF

RGB = tuple[int, int, int]


class ManifestError(ValueError):
    """Raised for manifest syntax or schema violations."""


class ContentKind(Enum):
    """Content item type; the numeric value is the stable wire tag."""

    TEXT = 0
    IMAGE = 1
    AUDIO = 2
    VIDEO = 3
    PHONE = 4
    EMAIL = 5
    WEBLINK = 6

    @property
    def json_name(self) -> str:
        return _KIND_TO_NAME[self]


_NAME_TO_KIND = {
    "text": ContentKind.TEXT,
    "image": ContentKind.IMAGE,
    "audio": ContentKind.AUDIO,
    "video": ContentKind.VIDEO,
    "phone": ContentKind.PHONE,
    "email": ContentKind.EMAIL,
    "weblink": ContentKind.WEBLINK,
}
_KIND_TO_NAME = {kind: name for name, kind in _NAME_TO_KIND.items()}

MEDIA_KINDS = frozenset({ContentKind.IMAGE, ContentKind.AUDIO, ContentKind.VIDEO})
CONTACT_KINDS = frozenset({ContentKind.PHONE, ContentKind.EMAIL, ContentKind.WEBLINK})


@dataclass(frozen=True)
class ContentItem:
    """One typed content item inside a page.

    Only the fields matching ``kind`` are meaningful; the rest stay at
    their defaults so items compare equal after a wire roundtrip.
    """

    kind: ContentKind
    text: str = ""
    color_index: int = 0
    font_id: int = 0
    asset_ref: str = ""
    caption: str = ""
    value: str = ""
    label: str = ""

    @classmethod
    def text_item(cls, text: str, color_index: int = 0, font_id: int = 0) -> "ContentItem":
        return cls(ContentKind.TEXT, text=text, color_index=color_index, font_id=font_id)

    @classmethod
    def media_item(cls, kind: ContentKind, asset_ref: str, caption: str = "") -> "ContentItem":
        if kind not in MEDIA_KINDS:
            raise ValueError(f"{kind} is not a media kind")
        return cls(kind, asset_ref=asset_ref, caption=caption)

    @classmethod
    def contact_item(cls, kind: ContentKind, value: str, label: str = "") -> "ContentItem":
        if kind not in CONTACT_KINDS:
            raise ValueError(f"{kind} is not a contact kind")
        return cls(kind, value=value, label=label)


@dataclass(frozen=True)
class PageNode:
    """One page in the authored tree."""

    page_id: int
    title: str
    children: tuple["PageNode", ...] = ()
    items: tuple[ContentItem, ...] = ()


@dataclass(frozen=True)
class Theme:
    """Colors, palette and optional decoration assets of the output."""

    background: RGB
    text_default: RGB
    highlight: RGB
    header: RGB
    text_palette: tuple[RGB, ...]
    splash_enabled: bool = False
    splash_image: str | None = None
    background_image: str | None = None
    background_music: str | None = None


@dataclass(frozen=True)
class ProjectManifest:
    """A fully parsed project: page tree plus theme and input locations."""

    title: str
    version: str
    roots: tuple[PageNode, ...]
    theme: Theme
    font_source: str
    asset_dir: str


@dataclass(frozen=True)
class Finding:
    """One validation problem; ``page_id``/``item_index`` locate it when known."""

    code: str
    message: str
    page_id: int | None = None
    item_index: int | None = None


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, code: str, message: str, page_id: int | None = None,
            item_index: int | None = None) -> None:
        self.findings.append(Finding(code, message, page_id, item_index))


def parse_color(value: str, where: str) -> RGB:
    """Parse a "#RRGGBB" string into an (r, g, b) triple."""
    if not isinstance(value, str) or len(value) != 7 or not value.startswith("#"):
        raise ManifestError(f"{where}: expected color string \"#RRGGBB\", got {value!r}")
    try:
        return (int(value[1:3], 16), int(value[3:5], 16), int(value[5:7], 16))
    except ValueError:
        raise ManifestError(f"{where}: invalid hex color {value!r}") from None


def format_color(rgb: RGB) -> str:
    return "#{:02X}{:02X}{:02X}".format(*rgb)


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise ManifestError(f"{where}: missing field {key!r}")
    return obj[key]


def _require_str(obj: dict, key: str, where: str) -> str:
    value = _require(obj, key, where)
    if not isinstance(value, str):
        raise ManifestError(f"{where}: field {key!r} must be a string")
    return value


def _require_int(obj: dict, key: str, where: str) -> int:
    value = _require(obj, key, where)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ManifestError(f"{where}: field {key!r} must be an integer")
    return value


def _require_list(obj: dict, key: str, where: str) -> list:
    value = _require(obj, key, where)
    if not isinstance(value, list):
        raise ManifestError(f"{where}: field {key!r} must be an array")
    return value


def _require_dict(obj: dict, key: str, where: str) -> dict:
    value = _require(obj, key, where)
    if not isinstance(value, dict):
        raise ManifestError(f"{where}: field {key!r} must be an object")
    return value


def _optional_str(obj: dict, key: str, where: str) -> str | None:
    value = obj.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ManifestError(f"{where}: field {key!r} must be a string or null")
    return value or None


def _parse_item(obj: Any, where: str) -> ContentItem:
    if not isinstance(obj, dict):
        raise ManifestError(f"{where}: item must be an object")
    kind_name = _require_str(obj, "kind", where)
    kind = _NAME_TO_KIND.get(kind_name)
    if kind is None:
        raise ManifestError(f"{where}: unknown item kind {kind_name!r}")
    if kind is ContentKind.TEXT:
        text = _require_str(obj, "text", where)
        color_index = obj.get("color_index", 0)
        font_id = obj.get("font_id", 0)
        if not isinstance(color_index, int) or isinstance(color_index, bool):
            raise ManifestError(f"{where}: field 'color_index' must be an integer")
        if not isinstance(font_id, int) or isinstance(font_id, bool):
            raise ManifestError(f"{where}: field 'font_id' must be an integer")
        if not (0 <= color_index <= 255) or not (0 <= font_id <= 255):
            raise ManifestError(f"{where}: color_index and font_id must fit in one byte")
        return ContentItem.text_item(text, color_index, font_id)
    if kind in MEDIA_KINDS:
        asset_ref = _require_str(obj, "asset_ref", where)
        caption = obj.get("caption", "")
        if not isinstance(caption, str):
            raise ManifestError(f"{where}: field 'caption' must be a string")
        return ContentItem.media_item(kind, asset_ref, caption)
    value = _require_str(obj, "value", where)
    label = obj.get("label", "")
    if not isinstance(label, str):
        raise ManifestError(f"{where}: field 'label' must be a string")
    return ContentItem.contact_item(kind, value, label)


def _parse_page(obj: Any, where: str, seen_ids: dict[int, str]) -> PageNode:
    if not isinstance(obj, dict):
        raise ManifestError(f"{where}: page must be an object")
    page_id = _require_int(obj, "id", where)
    if not (0 <= page_id < ROOT_PARENT):
        raise ManifestError(f"{where}: page id {page_id} out of range (must be a u32 below {ROOT_PARENT:#x})")
    if page_id in seen_ids:
        raise ManifestError(f"{where}: duplicate page id {page_id} (first used at {seen_ids[page_id]})")
    seen_ids[page_id] = where
    title = _require_str(obj, "title", where)
    items = tuple(
        _parse_item(item, f"{where}.items[{i}]")
        for i, item in enumerate(obj.get("items", []))
    )
    children = tuple(
        _parse_page(child, f"{where}.children[{i}]", seen_ids)
        for i, child in enumerate(obj.get("children", []))
    )
    return PageNode(page_id, title, children, items)


def _parse_theme(obj: dict, where: str) -> Theme:
    colors = _require_dict(obj, "colors", where)
    background = parse_color(_require(colors, "background", f"{where}.colors"), f"{where}.colors.background")
    text_default = parse_color(_require(colors, "text", f"{where}.colors"), f"{where}.colors.text")
    highlight = parse_color(_require(colors, "highlight", f"{where}.colors"), f"{where}.colors.highlight")
    header = parse_color(_require(colors, "header", f"{where}.colors"), f"{where}.colors.header")
    palette_raw = _require_list(obj, "palette", where)
    if not (1 <= len(palette_raw) <= 255):
        raise ManifestError(f"{where}: palette must have 1..255 entries, got {len(palette_raw)}")
    palette = tuple(
        parse_color(entry, f"{where}.palette[{i}]") for i, entry in enumerate(palette_raw)
    )
    splash_enabled = obj.get("splash_enabled", False)
    if not isinstance(splash_enabled, bool):
        raise ManifestError(f"{where}: field 'splash_enabled' must be a boolean")
    splash_image = _optional_str(obj, "splash_image", where)
    if not splash_enabled:
        # The binary theme only stores a splash image when the splash is
        # enabled, so drop a stray reference here to keep roundtrips exact.
        splash_image = None
    return Theme(
        background=background,
        text_default=text_default,
        highlight=highlight,
        header=header,
        text_palette=palette,
        splash_enabled=splash_enabled,
        splash_image=splash_image,
        background_image=_optional_str(obj, "background_image", where),
        background_music=_optional_str(obj, "background_music", where),
    )


def parse_manifest(text: str) -> ProjectManifest:
    """Parse a manifest document, preserving page and item order exactly.

    Raises ManifestError for malformed JSON (with line/column), schema
    violations, or duplicate page ids.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ManifestError("manifest: top level must be an object")
    where = "manifest"
    title = _require_str(doc, "title", where)
    version = _require_str(doc, "version", where)
    font_source = _require_str(doc, "font_source", where)
    asset_dir = _require_str(doc, "asset_dir", where)
    theme = _parse_theme(_require_dict(doc, "theme", where), f"{where}.theme")
    pages_raw = _require_list(doc, "pages", where)
    if not pages_raw:
        raise ManifestError(f"{where}: 'pages' must contain at least one root page")
    seen_ids: dict[int, str] = {}
    roots = tuple(
        _parse_page(page, f"{where}.pages[{i}]", seen_ids) for i, page in enumerate(pages_raw)
    )
    return ProjectManifest(title, version, roots, theme, font_source, asset_dir)


def _item_to_json(item: ContentItem) -> dict:
    obj: dict[str, Any] = {"kind": item.kind.json_name}
    if item.kind is ContentKind.TEXT:
        obj.update(text=item.text, color_index=item.color_index, font_id=item.font_id)
    elif item.kind in MEDIA_KINDS:
        obj.update(asset_ref=item.asset_ref, caption=item.caption)
    else:
        obj.update(value=item.value, label=item.label)
    return obj


def _page_to_json(page: PageNode) -> dict:
    return {
        "id": page.page_id,
        "title": page.title,
        "items": [_item_to_json(item) for item in page.items],
        "children": [_page_to_json(child) for child in page.children],
    }


def serialize_manifest(manifest: ProjectManifest) -> str:
    """Emit a manifest document that parses back to an equal ProjectManifest."""
    theme = manifest.theme
    doc = {
        "title": manifest.title,
        "version": manifest.version,
        "font_source": manifest.font_source,
        "asset_dir": manifest.asset_dir,
        "theme": {
            "colors": {
                "background": format_color(theme.background),
                "text": format_color(theme.text_default),
                "highlight": format_color(theme.highlight),
                "header": format_color(theme.header),
            },
            "palette": [format_color(c) for c in theme.text_palette],
            "splash_enabled": theme.splash_enabled,
            "splash_image": theme.splash_image,
            "background_image": theme.background_image,
            "background_music": theme.background_music,
        },
        "pages": [_page_to_json(root) for root in manifest.roots],
    }
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def iter_pages(manifest: ProjectManifest) -> Iterator[PageNode]:
    """Yield every page in preorder (depth first, children in authored order)."""
    stack = list(reversed(manifest.roots))
    while stack:
        page = stack.pop()
        yield page
        stack.extend(reversed(page.children))


def flatten(manifest: ProjectManifest) -> list[tuple[PageNode, int]]:
    """Preorder list of (page, parent_id); roots get the ROOT_PARENT sentinel."""
    out: list[tuple[PageNode, int]] = []

    def walk(page: PageNode, parent_id: int) -> None:
        out.append((page, parent_id))
        for child in page.children:
            walk(child, page.page_id)

    for root in manifest.roots:
        walk(root, ROOT_PARENT)
    return out


def _check_asset_ref(report: ValidationReport, ref: str, available: Collection[str],
                     what: str, page_id: int | None, item_index: int | None) -> None:
    if not ref:
        report.add("bad-asset-ref", f"{what}: empty asset_ref", page_id, item_index)
        return
    if ".." in ref.split("/"):
        report.add("bad-asset-ref", f"{what}: asset_ref {ref!r} contains '..'", page_id, item_index)
        return
    if ref not in available:
        report.add("missing-asset", f"{what}: asset {ref!r} not found under asset_dir",
                   page_id, item_index)


def validate(manifest: ProjectManifest, available_assets: Collection[str]) -> ValidationReport:
    """Check semantic invariants; findings are data, not failures.

    ``available_assets`` is the set of relative paths ('/' separated)
    present under the manifest's asset directory.
    """
    report = ValidationReport()
    available = set(available_assets)
    palette_size = len(manifest.theme.text_palette)

    theme = manifest.theme
    if theme.splash_enabled and not theme.splash_image:
        report.add("splash-image-missing", "splash is enabled but no splash_image is set")
    for what, ref in (("splash_image", theme.splash_image),
                      ("background_image", theme.background_image),
                      ("background_music", theme.background_music)):
        if ref is not None:
            _check_asset_ref(report, ref, available, f"theme.{what}", None, None)

    for page, _parent in flatten(manifest):
        for index, item in enumerate(page.items):
            what = f"page {page.page_id} item {index} ({item.kind.json_name})"
            if item.kind is ContentKind.TEXT:
                if not item.text:
                    report.add("empty-text", f"{what}: text must not be empty",
                               page.page_id, index)
                if item.color_index >= palette_size:
                    report.add("palette-overflow",
                               f"{what}: color_index {item.color_index} >= palette size {palette_size}",
                               page.page_id, index)
            elif item.kind in MEDIA_KINDS:
                _check_asset_ref(report, item.asset_ref, available, what, page.page_id, index)
            else:
                if not item.value:
                    report.add("empty-value", f"{what}: value must not be empty",
                               page.page_id, index)
    return report
