"""contentforge: compile content trees into binary bundles and run them.

The pipeline: a JSON manifest describing a tree of multimedia pages is
compiled into four binary files (index, content, theme, font) plus the
referenced assets; those files can be injected into a template ZIP
archive; and the result can be browsed through a headless engine exposed
over a CLI and an HTTP preview service.
"""

from .content_model import (
    ContentItem,
    ContentKind,
    Finding,
    ManifestError,
    PageNode,
    ProjectManifest,
    Theme,
    ValidationReport,
    flatten,
    parse_manifest,
    serialize_manifest,
    validate,
)
from .bundle_codec import (
    BundleFiles,
    BundleIndex,
    IndexEntry,
    UnknownPageError,
    decode_index,
    decode_theme,
    encode_bundle,
    encode_theme,
    load_bundle_dir,
    read_page,
    verify_bundle,
    write_bundle_dir,
)
from .glyphs import (
    FontError,
    Glyph,
    GlyphAtlas,
    GlyphForm,
    JoiningClass,
    decode_font,
    encode_font,
    generate_test_font,
)
from .shaping import (
    DEFAULT_ARABIC_JOINING,
    LayoutResult,
    PositionedGlyph,
    joining_class,
    measure,
    resolve_form,
    shape_text,
)
from .raster import Canvas, RasterError, rasterize
from .engine import (
    BundleHandle,
    EngineState,
    Event,
    EventType,
    SearchMatch,
    Viewport,
    handle_event,
    init,
    search_content,
    visible_rows,
)
from .packager import (
    ArchiveEntrySummary,
    ArchiveError,
    InjectionPlan,
    inject,
    list_entries,
    verify_injection,
)
from .wire import CodecError, CountingSource

__version__ = "0.1.0"

__all__ = [
    "ArchiveEntrySummary",
    "ArchiveError",
    "BundleFiles",
    "BundleHandle",
    "BundleIndex",
    "Canvas",
    "CodecError",
    "ContentItem",
    "ContentKind",
    "CountingSource",
    "DEFAULT_ARABIC_JOINING",
    "EngineState",
    "Event",
    "EventType",
    "Finding",
    "FontError",
    "Glyph",
    "GlyphAtlas",
    "GlyphForm",
    "IndexEntry",
    "InjectionPlan",
    "JoiningClass",
    "LayoutResult",
    "ManifestError",
    "PageNode",
    "PositionedGlyph",
    "ProjectManifest",
    "RasterError",
    "SearchMatch",
    "Theme",
    "UnknownPageError",
    "ValidationReport",
    "Viewport",
    "decode_font",
    "decode_index",
    "decode_theme",
    "encode_bundle",
    "encode_font",
    "encode_theme",
    "flatten",
    "generate_test_font",
    "handle_event",
    "init",
    "inject",
    "joining_class",
    "list_entries",
    "load_bundle_dir",
    "measure",
    "parse_manifest",
    "rasterize",
    "read_page",
    "resolve_form",
    "search_content",
    "serialize_manifest",
    "shape_text",
    "validate",
    "verify_bundle",
    "verify_injection",
    "visible_rows",
    "write_bundle_dir",
]
