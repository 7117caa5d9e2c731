"""Headless content runtime: navigation state machine, media rules, search.

The engine mirrors the end-user application: an optional splash screen, a
collapsible tree index of pages, a scrollable page view, and full-text
search. It owns no devices; every side effect (playing audio, composing a
message, dialing) is returned as an Effect value for the host to act on.

Rules of note:

  * Entering a page selects its first audio item. The selected sound
    starts playing the first time its icon row scrolls into view, once
    per visit.
  * ToggleAudio stops the current sound and plays the next one, wrapping
    around; ToggleVideo cycles the selected video the same way.
  * Select on the focused (topmost visible) row activates it: dial for
    phone numbers, open for web links, compose for emails, play for
    media. Share composes a message from the focused item.
  * Back walks out: page to index, collapsing the index tree level by
    level until the cursor rests at root level.

A state is immutable; handle_event returns the next state plus effects.
Events are total: anything that does not apply to the current screen is a
no-op.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Union

from .bundle_codec import (
    BundleFiles,
    BundleIndex,
    decode_index,
    decode_theme,
    read_page,
)
from .content_model import ContentItem, ContentKind, Theme
from .glyphs import GlyphAtlas, decode_font
from .shaping import LayoutResult, shape_text
from .wire import ByteSource, StreamSource

ICON_ROW_HEIGHT = 16

RGB = tuple[int, int, int]


class EngineError(ValueError):
    """Raised when a runtime cannot be brought up (for example an empty index)."""


# ---------------------------------------------------------------------------
# Effects


@dataclass(frozen=True)
class PlayAudio:
    asset_ref: str


@dataclass(frozen=True)
class StopAudio:
    pass


@dataclass(frozen=True)
class PlayVideo:
    asset_ref: str


@dataclass(frozen=True)
class PlayBackgroundMusic:
    asset_ref: str


@dataclass(frozen=True)
class ComposeMessage:
    kind: ContentKind
    payload: str


@dataclass(frozen=True)
class OpenLink:
    url: str


@dataclass(frozen=True)
class DialNumber:
    number: str


Effect = Union[
    PlayAudio, StopAudio, PlayVideo, PlayBackgroundMusic,
    ComposeMessage, OpenLink, DialNumber,
]


# ---------------------------------------------------------------------------
# Events


class EventType(Enum):
    UP = "Up"
    DOWN = "Down"
    SELECT = "Select"
    BACK = "Back"
    TOGGLE_AUDIO = "ToggleAudio"
    TOGGLE_VIDEO = "ToggleVideo"
    SHARE = "Share"
    SEARCH_OPEN = "SearchOpen"
    SEARCH_SUBMIT = "SearchSubmit"
    TICK = "Tick"


@dataclass(frozen=True)
class Event:
    type: EventType
    query: str = ""


# ---------------------------------------------------------------------------
# Screens and state


@dataclass(frozen=True)
class Viewport:
    width: int
    height: int


@dataclass(frozen=True)
class SplashScreen:
    pass


@dataclass(frozen=True)
class IndexScreen:
    cursor: int = 0
    expanded: frozenset[int] = frozenset()


@dataclass(frozen=True)
class Row:
    """One content row on a page: its item, pixel extent, and text layout."""

    item_index: int
    kind: ContentKind
    top: int
    height: int
    layout: LayoutResult | None = None
    media_ordinal: int | None = None  # ordinal among same-kind media items


@dataclass(frozen=True)
class PageScreen:
    page_id: int
    scroll_offset: int
    records: tuple[ContentItem, ...]
    rows: tuple[Row, ...]
    total_height: int


@dataclass(frozen=True)
class SearchMatch:
    page_id: int
    item_index: int  # -1 when the match is in the page title
    char_offset: int
    snippet: str


@dataclass(frozen=True)
class SearchResultsScreen:
    query: str
    results: tuple[SearchMatch, ...]
    cursor: int = 0


Screen = Union[SplashScreen, IndexScreen, PageScreen, SearchResultsScreen]


@dataclass(frozen=True)
class MediaSelection:
    audio_index: int | None = None
    video_index: int | None = None
    audio_playing: bool = False


@dataclass(frozen=True)
class BundleHandle:
    """Decoded bundle plus a factory for fresh content readers."""

    index: BundleIndex
    theme: Theme
    atlas: GlyphAtlas
    open_reader: Callable[[], ByteSource]

    @classmethod
    def from_files(cls, files: BundleFiles) -> "BundleHandle":
        content = files.content_bytes
        return cls(
            index=decode_index(files.index_bytes),
            theme=decode_theme(files.theme_bytes),
            atlas=decode_font(files.font_bytes),
            open_reader=lambda: StreamSource(io.BytesIO(content)),
        )

    @classmethod
    def from_dir(cls, bundle_dir: str | Path) -> "BundleHandle":
        root = Path(bundle_dir)
        content_path = root / "content.bin"
        return cls(
            index=decode_index((root / "index.bin").read_bytes()),
            theme=decode_theme((root / "theme.bin").read_bytes()),
            atlas=decode_font((root / "font.bin").read_bytes()),
            open_reader=lambda: StreamSource(open(content_path, "rb")),
        )

    def read_page(self, page_id: int) -> list[ContentItem]:
        reader = self.open_reader()
        try:
            return read_page(reader, self.index, page_id)
        finally:
            close = getattr(reader, "close", None)
            if close is not None:
                close()


@dataclass(frozen=True)
class EngineState:
    handle: BundleHandle
    viewport: Viewport
    theme: Theme
    screen: Screen
    media: MediaSelection
    saved_index: IndexScreen  # index view restored when backing out


# ---------------------------------------------------------------------------
# Tree helpers


def index_children(index: BundleIndex) -> dict[int, tuple[int, ...]]:
    children: dict[int, list[int]] = {e.page_id: [] for e in index.entries}
    for entry in index.entries:
        if entry.parent_id in children:
            children[entry.parent_id].append(entry.page_id)
    return {pid: tuple(kids) for pid, kids in children.items()}


def index_roots(index: BundleIndex) -> tuple[int, ...]:
    ids = {e.page_id for e in index.entries}
    return tuple(e.page_id for e in index.entries if e.parent_id not in ids)


@dataclass(frozen=True)
class IndexRow:
    page_id: int
    depth: int
    has_children: bool


def index_rows(index: BundleIndex, expanded: frozenset[int]) -> list[IndexRow]:
    """Visible tree rows: roots in order, expanded nodes followed by children."""
    children = index_children(index)
    rows: list[IndexRow] = []

    def walk(page_id: int, depth: int) -> None:
        kids = children.get(page_id, ())
        rows.append(IndexRow(page_id, depth, bool(kids)))
        if page_id in expanded:
            for kid in kids:
                walk(kid, depth + 1)

    for root in index_roots(index):
        walk(root, 0)
    return rows


# ---------------------------------------------------------------------------
# Page layout rows


def compute_page_rows(
    records: tuple[ContentItem, ...] | list[ContentItem],
    atlas: GlyphAtlas,
    width: int,
    palette: tuple[RGB, ...] | None = None,
    text_default: RGB = (0, 0, 0),
) -> tuple[tuple[Row, ...], int]:
    """Stack content rows top to bottom and return them with the total height.

    Text rows are as tall as their shaped line count; media and contact
    rows are fixed icon rows of ICON_ROW_HEIGHT pixels.
    """
    rows: list[Row] = []
    top = 0
    audio_seen = 0
    video_seen = 0
    for item_index, record in enumerate(records):
        if record.kind is ContentKind.TEXT:
            color = text_default
            if palette and record.color_index < len(palette):
                color = palette[record.color_index]
            layout = shape_text(atlas, record.text, width, color)
            row = Row(item_index, record.kind, top, layout.total_height, layout)
        else:
            ordinal = None
            if record.kind is ContentKind.AUDIO:
                ordinal = audio_seen
                audio_seen += 1
            elif record.kind is ContentKind.VIDEO:
                ordinal = video_seen
                video_seen += 1
            row = Row(item_index, record.kind, top, ICON_ROW_HEIGHT, None, ordinal)
        rows.append(row)
        top += row.height
    return tuple(rows), top


def visible_rows(state: EngineState) -> list[Row]:
    """Rows whose pixel interval intersects the current viewport window."""
    screen = state.screen
    if not isinstance(screen, PageScreen):
        return []
    lo = screen.scroll_offset
    hi = screen.scroll_offset + state.viewport.height
    return [r for r in screen.rows if r.top < hi and r.top + r.height > lo]


def _audio_items(records: tuple[ContentItem, ...]) -> list[ContentItem]:
    return [r for r in records if r.kind is ContentKind.AUDIO]


def _video_items(records: tuple[ContentItem, ...]) -> list[ContentItem]:
    return [r for r in records if r.kind is ContentKind.VIDEO]


# ---------------------------------------------------------------------------
# State machine


def init(handle: BundleHandle, viewport: Viewport) -> tuple[EngineState, list[Effect]]:
    """Bring up a session: splash when enabled, otherwise the tree index."""
    if not handle.index.entries:
        raise EngineError("bundle index is empty")
    theme = handle.theme
    saved = IndexScreen(cursor=0, expanded=frozenset())
    screen: Screen = SplashScreen() if theme.splash_enabled else saved
    state = EngineState(
        handle=handle,
        viewport=viewport,
        theme=theme,
        screen=screen,
        media=MediaSelection(),
        saved_index=saved,
    )
    effects: list[Effect] = []
    if theme.background_music:
        effects.append(PlayBackgroundMusic(theme.background_music))
    return state, effects


def _enter_page(state: EngineState, page_id: int) -> EngineState:
    records = tuple(state.handle.read_page(page_id))
    rows, total_height = compute_page_rows(
        records,
        state.handle.atlas,
        state.viewport.width,
        state.theme.text_palette,
        state.theme.text_default,
    )
    media = MediaSelection(
        audio_index=0 if _audio_items(records) else None,
        video_index=0 if _video_items(records) else None,
        audio_playing=False,
    )
    screen = PageScreen(page_id, 0, records, rows, total_height)
    return replace(state, screen=screen, media=media)


def _autoplay(state: EngineState, effects: list[Effect]) -> EngineState:
    """Start the selected sound the first time its icon row is visible."""
    screen = state.screen
    media = state.media
    if not isinstance(screen, PageScreen):
        return state
    if media.audio_index is None or media.audio_playing:
        return state
    for row in visible_rows(state):
        if row.kind is ContentKind.AUDIO and row.media_ordinal == media.audio_index:
            ref = _audio_items(screen.records)[media.audio_index].asset_ref
            effects.append(PlayAudio(ref))
            return replace(state, media=replace(media, audio_playing=True))
    return state


def _focused_row(state: EngineState) -> Row | None:
    rows = visible_rows(state)
    return rows[0] if rows else None


def _activate_item(state: EngineState, item: ContentItem, row: Row,
                   effects: list[Effect]) -> EngineState:
    kind = item.kind
    if kind is ContentKind.PHONE:
        effects.append(DialNumber(item.value))
    elif kind is ContentKind.WEBLINK:
        effects.append(OpenLink(item.value))
    elif kind is ContentKind.EMAIL:
        effects.append(ComposeMessage(ContentKind.EMAIL, item.value))
    elif kind is ContentKind.AUDIO and row.media_ordinal is not None:
        effects.append(StopAudio())
        effects.append(PlayAudio(item.asset_ref))
        state = replace(state, media=replace(
            state.media, audio_index=row.media_ordinal, audio_playing=True))
    elif kind is ContentKind.VIDEO and row.media_ordinal is not None:
        effects.append(PlayVideo(item.asset_ref))
        state = replace(state, media=replace(state.media, video_index=row.media_ordinal))
    return state


def _share_payload(item: ContentItem) -> str:
    if item.kind is ContentKind.TEXT:
        return item.text
    if item.kind in (ContentKind.PHONE, ContentKind.EMAIL, ContentKind.WEBLINK):
        return item.value
    return item.asset_ref


def _handle_index(state: EngineState, screen: IndexScreen, event: Event,
                  effects: list[Effect]) -> EngineState:
    rows = index_rows(state.handle.index, screen.expanded)

    def with_index(new_screen: IndexScreen) -> EngineState:
        return replace(state, screen=new_screen, saved_index=new_screen)

    if event.type is EventType.UP:
        return with_index(replace(screen, cursor=max(0, screen.cursor - 1)))
    if event.type is EventType.DOWN:
        return with_index(replace(screen, cursor=min(len(rows) - 1, screen.cursor + 1)))
    if event.type is EventType.SELECT:
        row = rows[min(screen.cursor, len(rows) - 1)]
        if row.has_children and row.page_id not in screen.expanded:
            return with_index(replace(screen, expanded=screen.expanded | {row.page_id}))
        return _enter_page(state, row.page_id)
    if event.type is EventType.BACK:
        row = rows[min(screen.cursor, len(rows) - 1)]
        if row.page_id in screen.expanded:
            return with_index(replace(screen, expanded=screen.expanded - {row.page_id}))
        parent_id = state.handle.index.entry(row.page_id).parent_id
        if state.handle.index.has_page(parent_id):
            collapsed = screen.expanded - {parent_id}
            new_rows = index_rows(state.handle.index, collapsed)
            cursor = next(
                (i for i, r in enumerate(new_rows) if r.page_id == parent_id), 0)
            return with_index(IndexScreen(cursor=cursor, expanded=collapsed))
        return state  # root level: leaving the application is the host's call
    return state


def _handle_page(state: EngineState, screen: PageScreen, event: Event,
                 effects: list[Effect]) -> EngineState:
    atlas = state.handle.atlas
    max_scroll = max(0, screen.total_height - state.viewport.height)
    if event.type is EventType.UP:
        offset = max(0, screen.scroll_offset - atlas.line_height)
        return replace(state, screen=replace(screen, scroll_offset=offset))
    if event.type is EventType.DOWN:
        offset = min(max_scroll, screen.scroll_offset + atlas.line_height)
        return replace(state, screen=replace(screen, scroll_offset=offset))
    if event.type is EventType.BACK:
        return replace(state, screen=state.saved_index, media=MediaSelection())
    if event.type is EventType.TOGGLE_AUDIO:
        audio = _audio_items(screen.records)
        if not audio:
            return state
        current = state.media.audio_index if state.media.audio_index is not None else -1
        nxt = (current + 1) % len(audio)
        effects.append(StopAudio())
        effects.append(PlayAudio(audio[nxt].asset_ref))
        return replace(state, media=replace(
            state.media, audio_index=nxt, audio_playing=True))
    if event.type is EventType.TOGGLE_VIDEO:
        videos = _video_items(screen.records)
        if not videos:
            return state
        current = state.media.video_index if state.media.video_index is not None else -1
        nxt = (current + 1) % len(videos)
        effects.append(PlayVideo(videos[nxt].asset_ref))
        return replace(state, media=replace(state.media, video_index=nxt))
    if event.type is EventType.SHARE:
        row = _focused_row(state)
        if row is not None:
            item = screen.records[row.item_index]
            effects.append(ComposeMessage(item.kind, _share_payload(item)))
        return state
    if event.type is EventType.SELECT:
        row = _focused_row(state)
        if row is not None:
            return _activate_item(state, screen.records[row.item_index], row, effects)
        return state
    return state


def _handle_search_results(state: EngineState, screen: SearchResultsScreen,
                           event: Event) -> EngineState:
    if event.type is EventType.UP:
        return replace(state, screen=replace(screen, cursor=max(0, screen.cursor - 1)))
    if event.type is EventType.DOWN:
        top = max(0, len(screen.results) - 1)
        return replace(state, screen=replace(screen, cursor=min(top, screen.cursor + 1)))
    if event.type is EventType.SELECT:
        if screen.results:
            match = screen.results[min(screen.cursor, len(screen.results) - 1)]
            return _enter_page(state, match.page_id)
        return state
    if event.type is EventType.BACK:
        return replace(state, screen=state.saved_index, media=MediaSelection())
    return state


def handle_event(state: EngineState, event: Event) -> tuple[EngineState, list[Effect]]:
    """Apply one event; unknown combinations leave the state unchanged."""
    effects: list[Effect] = []
    screen = state.screen

    if event.type is EventType.SEARCH_SUBMIT and not isinstance(screen, SplashScreen):
        query = event.query
        if fold_simple(query):
            results = tuple(search_content(
                state.handle.index, state.handle.open_reader, query))
            new_screen = SearchResultsScreen(query=query, results=results, cursor=0)
            return replace(state, screen=new_screen, media=MediaSelection()), effects
        return state, effects

    if isinstance(screen, SplashScreen):
        if event.type in (EventType.SELECT, EventType.TICK, EventType.BACK):
            state = replace(state, screen=state.saved_index)
        return state, effects
    if isinstance(screen, IndexScreen):
        state = _handle_index(state, screen, event, effects)
    elif isinstance(screen, PageScreen):
        state = _handle_page(state, screen, event, effects)
    elif isinstance(screen, SearchResultsScreen):
        state = _handle_search_results(state, screen, event)

    state = _autoplay(state, effects)
    return state, effects


# ---------------------------------------------------------------------------
# Full-text search


def fold_simple(text: str) -> str:
    """Per-codepoint lowercase that never changes the string length."""
    out = []
    for ch in text:
        low = ch.lower()
        out.append(low if len(low) == 1 else ch)
    return "".join(out)


def _occurrences(haystack: str, needle: str):
    start = 0
    while True:
        found = haystack.find(needle, start)
        if found < 0:
            return
        yield found
        start = found + 1


SNIPPET_CONTEXT = 20


def _snippet(text: str, offset: int, length: int) -> str:
    return text[max(0, offset - SNIPPET_CONTEXT):offset + length + SNIPPET_CONTEXT]


def search_content(
    index: BundleIndex,
    open_reader: Callable[[], ByteSource],
    query: str,
    fold: bool = True,
) -> list[SearchMatch]:
    """Scan titles and text bodies page by page, never holding the whole file.

    Pages are visited in index (preorder) order; each is fetched with a
    bounded read through a fresh reader. Matching is overlapping substring
    search under simple case folding.
    """
    needle = fold_simple(query) if fold else query
    if not needle:
        return []
    matches: list[SearchMatch] = []
    for entry in index.entries:
        folded_title = fold_simple(entry.title) if fold else entry.title
        for offset in _occurrences(folded_title, needle):
            matches.append(SearchMatch(
                entry.page_id, -1, offset, _snippet(entry.title, offset, len(needle))))
        reader = open_reader()
        try:
            records = read_page(reader, index, entry.page_id)
        finally:
            close = getattr(reader, "close", None)
            if close is not None:
                close()
        for item_index, record in enumerate(records):
            if record.kind is not ContentKind.TEXT:
                continue
            folded = fold_simple(record.text) if fold else record.text
            for offset in _occurrences(folded, needle):
                matches.append(SearchMatch(
                    entry.page_id, item_index, offset,
                    _snippet(record.text, offset, len(needle))))
    return matches
