"""HTTP preview service: bundle data endpoints plus live engine sessions.

All responses are JSON except /api/asset (raw bytes) and the static viewer
files. Engine sessions live in memory; events for one session are applied
serially while distinct sessions proceed in parallel.

API summary:

  GET    /api/tree                      page tree
  GET    /api/page/{id}                 decoded records of one page
  GET    /api/page/{id}/layout?width=W  positioned glyphs for every text row
  GET    /api/theme                     colors, palette, decoration refs
  GET    /api/font/glyph/{cp}/{form}    one glyph bitmap (base64) + metrics
  GET    /api/search?q=...              full-text matches
  GET    /api/asset/{ref}               raw asset bytes
  POST   /api/session                   create a session -> {session_id, state}
  GET    /api/session/{id}              current state
  POST   /api/session/{id}/event        apply {"type": ...} -> {state, effects}
  DELETE /api/session/{id}              drop the session

Errors come back as HTTP 400/404 with {"error", "detail"}.
"""

from __future__ import annotations

import base64
import json
import mimetypes
import secrets
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any
from urllib.parse import parse_qs, unquote, urlsplit

from . import engine as eng
from .bundle_codec import UnknownPageError
from .content_model import ContentItem, ContentKind, Theme, format_color
from .glyphs import REPLACEMENT_CODEPOINT, Glyph, GlyphForm
from .wire import CodecError

DEFAULT_VIEWPORT = eng.Viewport(240, 320)
DEFAULT_IDLE_TIMEOUT = 30 * 60  # seconds

# Pinned types for the media extensions bundles actually carry; the host
# mimetypes table is only a fallback (its .mid mapping varies by platform).
_CONTENT_TYPES = {
    ".mid": "audio/midi",
    ".midi": "audio/midi",
    ".mp3": "audio/mpeg",
    ".wav": "audio/wav",
    ".amr": "audio/amr",
    ".3gp": "video/3gpp",
    ".mp4": "video/mp4",
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".gif": "image/gif",
}


def guess_content_type(name: str) -> str:
    suffix = Path(name.lower()).suffix
    if suffix in _CONTENT_TYPES:
        return _CONTENT_TYPES[suffix]
    return mimetypes.guess_type(name)[0] or "application/octet-stream"


@dataclass
class Session:
    session_id: str
    state: eng.EngineState
    created_at: float
    last_event_at: float
    lock: threading.Lock = field(default_factory=threading.Lock)


class ServiceContext:
    """Shared immutable bundle data plus the mutable session table."""

    def __init__(self, handle: eng.BundleHandle, assets: dict[str, bytes] | None = None,
                 asset_dir: Path | None = None, static_dir: Path | None = None,
                 idle_timeout: float = DEFAULT_IDLE_TIMEOUT) -> None:
        self.handle = handle
        self.assets = assets or {}
        self.asset_dir = asset_dir
        self.static_dir = static_dir
        self.idle_timeout = idle_timeout
        self.sessions: dict[str, Session] = {}
        self.sessions_lock = threading.Lock()

    @classmethod
    def from_dir(cls, bundle_dir: str | Path, static_dir: str | Path | None = None,
                 idle_timeout: float = DEFAULT_IDLE_TIMEOUT) -> "ServiceContext":
        bundle_dir = Path(bundle_dir)
        return cls(
            handle=eng.BundleHandle.from_dir(bundle_dir),
            asset_dir=bundle_dir / "assets",
            static_dir=Path(static_dir) if static_dir else None,
            idle_timeout=idle_timeout,
        )

    def load_asset(self, ref: str) -> bytes | None:
        if ref in self.assets:
            return self.assets[ref]
        if self.asset_dir is not None and ".." not in ref.split("/"):
            path = self.asset_dir / ref
            if path.is_file():
                return path.read_bytes()
        return None

    # -- session table ----------------------------------------------------

    def purge_expired(self, now: float | None = None) -> None:
        now = time.monotonic() if now is None else now
        with self.sessions_lock:
            dead = [sid for sid, s in self.sessions.items()
                    if now - s.last_event_at > self.idle_timeout]
            for sid in dead:
                del self.sessions[sid]

    def create_session(self, viewport: eng.Viewport) -> tuple[Session, list[eng.Effect]]:
        state, effects = eng.init(self.handle, viewport)
        now = time.monotonic()
        session = Session(secrets.token_hex(8), state, now, now)
        with self.sessions_lock:
            self.sessions[session.session_id] = session
        return session, effects

    def get_session(self, session_id: str) -> Session | None:
        self.purge_expired()
        with self.sessions_lock:
            return self.sessions.get(session_id)

    def drop_session(self, session_id: str) -> bool:
        with self.sessions_lock:
            return self.sessions.pop(session_id, None) is not None


# ---------------------------------------------------------------------------
# JSON projections


def item_to_dict(item: ContentItem) -> dict[str, Any]:
    out: dict[str, Any] = {"kind": item.kind.json_name}
    if item.kind is ContentKind.TEXT:
        out.update(text=item.text, color_index=item.color_index, font_id=item.font_id)
    elif item.kind in (ContentKind.IMAGE, ContentKind.AUDIO, ContentKind.VIDEO):
        out.update(asset_ref=item.asset_ref, caption=item.caption)
    else:
        out.update(value=item.value, label=item.label)
    return out


def theme_to_dict(theme: Theme) -> dict[str, Any]:
    return {
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
    }


def match_to_dict(match: eng.SearchMatch) -> dict[str, Any]:
    return {
        "page_id": match.page_id,
        "item_index": match.item_index,
        "char_offset": match.char_offset,
        "snippet": match.snippet,
    }


def effect_to_dict(effect: eng.Effect) -> dict[str, Any]:
    if isinstance(effect, eng.PlayAudio):
        return {"type": "PlayAudio", "asset_ref": effect.asset_ref}
    if isinstance(effect, eng.StopAudio):
        return {"type": "StopAudio"}
    if isinstance(effect, eng.PlayVideo):
        return {"type": "PlayVideo", "asset_ref": effect.asset_ref}
    if isinstance(effect, eng.PlayBackgroundMusic):
        return {"type": "PlayBackgroundMusic", "asset_ref": effect.asset_ref}
    if isinstance(effect, eng.ComposeMessage):
        return {"type": "ComposeMessage", "kind": effect.kind.json_name,
                "payload": effect.payload}
    if isinstance(effect, eng.OpenLink):
        return {"type": "OpenLink", "url": effect.url}
    if isinstance(effect, eng.DialNumber):
        return {"type": "DialNumber", "number": effect.number}
    raise TypeError(f"unknown effect {effect!r}")


def state_to_dict(state: eng.EngineState) -> dict[str, Any]:
    screen = state.screen
    titles = {e.page_id: e.title for e in state.handle.index.entries}
    if isinstance(screen, eng.SplashScreen):
        s: dict[str, Any] = {"type": "Splash"}
    elif isinstance(screen, eng.IndexScreen):
        rows = eng.index_rows(state.handle.index, screen.expanded)
        s = {
            "type": "Index",
            "cursor": screen.cursor,
            "expanded": sorted(screen.expanded),
            "rows": [
                {"page_id": r.page_id, "title": titles.get(r.page_id, ""),
                 "depth": r.depth, "has_children": r.has_children}
                for r in rows
            ],
        }
    elif isinstance(screen, eng.PageScreen):
        s = {
            "type": "Page",
            "page_id": screen.page_id,
            "title": titles.get(screen.page_id, ""),
            "scroll_offset": screen.scroll_offset,
            "total_height": screen.total_height,
        }
    elif isinstance(screen, eng.SearchResultsScreen):
        s = {
            "type": "SearchResults",
            "query": screen.query,
            "cursor": screen.cursor,
            "results": [match_to_dict(m) for m in screen.results],
        }
    else:
        raise TypeError(f"unknown screen {screen!r}")
    media = state.media
    return {
        "screen": s,
        "media": {
            "audio_index": media.audio_index,
            "video_index": media.video_index,
            "audio_playing": media.audio_playing,
        },
        "viewport": {"width": state.viewport.width, "height": state.viewport.height},
    }


def tree_to_dict(handle: eng.BundleHandle) -> dict[str, Any]:
    children = eng.index_children(handle.index)
    titles = {e.page_id: e.title for e in handle.index.entries}

    def node(page_id: int) -> dict[str, Any]:
        return {
            "id": page_id,
            "title": titles[page_id],
            "children": [node(kid) for kid in children.get(page_id, ())],
        }

    return {"roots": [node(root) for root in eng.index_roots(handle.index)]}


def glyph_to_dict(glyph: Glyph) -> dict[str, Any]:
    return {
        "codepoint": glyph.codepoint,
        "form": glyph.form.value,
        "width": glyph.width,
        "height": glyph.height,
        "x_bearing": glyph.x_bearing,
        "y_bearing": glyph.y_bearing,
        "advance": glyph.advance,
        "bitmap": base64.b64encode(glyph.bitmap).decode("ascii"),
    }


def page_layout_dict(context: ServiceContext, page_id: int, width: int) -> dict[str, Any]:
    handle = context.handle
    records = tuple(handle.read_page(page_id))
    rows, total_height = eng.compute_page_rows(
        records, handle.atlas, width, handle.theme.text_palette, handle.theme.text_default)
    out_rows: list[dict[str, Any]] = []
    for row in rows:
        row_dict: dict[str, Any] = {
            "item_index": row.item_index,
            "kind": records[row.item_index].kind.json_name,
            "top": row.top,
            "height": row.height,
        }
        if row.media_ordinal is not None:
            row_dict["ordinal"] = row.media_ordinal
        if row.layout is not None:
            row_dict["lines"] = [
                [
                    {
                        "codepoint": pg.codepoint,
                        "form": pg.form.value,
                        "x": pg.x,
                        "y": pg.y,
                        "w": pg.glyph.width,
                        "h": pg.glyph.height,
                        "color": format_color(pg.color),
                    }
                    for pg in line
                ]
                for line in row.layout.lines
            ]
        out_rows.append(row_dict)
    return {
        "page_id": page_id,
        "width": width,
        "line_height": handle.atlas.line_height,
        "total_height": total_height,
        "rows": out_rows,
    }


# ---------------------------------------------------------------------------
# HTTP plumbing


_FORM_NAMES = {f.name.lower(): f for f in GlyphForm}


def _parse_form(raw: str) -> GlyphForm | None:
    if raw.isdigit():
        try:
            return GlyphForm(int(raw))
        except ValueError:
            return None
    return _FORM_NAMES.get(raw.lower())


class _Handler(BaseHTTPRequestHandler):
    context: ServiceContext  # set on the subclass built by make_server

    protocol_version = "HTTP/1.1"

    # -- helpers ----------------------------------------------------------

    def log_message(self, fmt: str, *args: Any) -> None:  # quiet by default
        pass

    def _send_json(self, payload: Any, status: int = 200) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, error: str, detail: str = "") -> None:
        self._send_json({"error": error, "detail": detail}, status)

    def _send_bytes(self, data: bytes, content_type: str) -> None:
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _read_body(self) -> Any:
        length = int(self.headers.get("Content-Length", "0") or "0")
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return None

    # -- routing ----------------------------------------------------------

    def do_GET(self) -> None:
        url = urlsplit(self.path)
        parts = [unquote(p) for p in url.path.split("/") if p]
        query = parse_qs(url.query)
        ctx = self.context
        try:
            if parts[:1] != ["api"]:
                self._serve_static(url.path)
                return
            rest = parts[1:]
            if rest == ["tree"]:
                self._send_json(tree_to_dict(ctx.handle))
            elif len(rest) == 2 and rest[0] == "page":
                self._get_page(rest[1])
            elif len(rest) == 3 and rest[0] == "page" and rest[2] == "layout":
                self._get_layout(rest[1], query)
            elif rest == ["theme"]:
                self._send_json(theme_to_dict(ctx.handle.theme))
            elif len(rest) == 4 and rest[:2] == ["font", "glyph"]:
                self._get_glyph(rest[2], rest[3])
            elif rest == ["search"]:
                self._get_search(query)
            elif len(rest) >= 2 and rest[0] == "asset":
                self._get_asset("/".join(rest[1:]))
            elif len(rest) == 2 and rest[0] == "session":
                self._get_session(rest[1])
            else:
                self._send_error_json(404, "not-found", self.path)
        except BrokenPipeError:
            pass

    def do_POST(self) -> None:
        parts = [unquote(p) for p in urlsplit(self.path).path.split("/") if p]
        if parts == ["api", "session"]:
            self._post_session()
        elif len(parts) == 4 and parts[:2] == ["api", "session"] and parts[3] == "event":
            self._post_event(parts[2])
        else:
            self._send_error_json(404, "not-found", self.path)

    def do_DELETE(self) -> None:
        parts = [unquote(p) for p in urlsplit(self.path).path.split("/") if p]
        if len(parts) == 3 and parts[:2] == ["api", "session"]:
            if self.context.drop_session(parts[2]):
                self._send_json({"ok": True})
            else:
                self._send_error_json(404, "unknown-session", parts[2])
        else:
            self._send_error_json(404, "not-found", self.path)

    # -- endpoint bodies ---------------------------------------------------

    def _page_id(self, raw: str) -> int | None:
        try:
            return int(raw)
        except ValueError:
            self._send_error_json(400, "bad-page-id", raw)
            return None

    def _get_page(self, raw_id: str) -> None:
        page_id = self._page_id(raw_id)
        if page_id is None:
            return
        ctx = self.context
        try:
            records = ctx.handle.read_page(page_id)
        except UnknownPageError:
            self._send_error_json(404, "unknown-page", str(page_id))
            return
        entry = ctx.handle.index.entry(page_id)
        self._send_json({
            "page_id": page_id,
            "title": entry.title,
            "records": [item_to_dict(r) for r in records],
        })

    def _get_layout(self, raw_id: str, query: dict[str, list[str]]) -> None:
        page_id = self._page_id(raw_id)
        if page_id is None:
            return
        try:
            width = int(query.get("width", ["240"])[0])
        except ValueError:
            self._send_error_json(400, "bad-width", str(query.get("width")))
            return
        if width < self.context.handle.atlas.max_advance():
            self._send_error_json(400, "width-too-small",
                                  f"width {width} is below the widest glyph advance")
            return
        try:
            self._send_json(page_layout_dict(self.context, page_id, width))
        except UnknownPageError:
            self._send_error_json(404, "unknown-page", str(page_id))

    def _get_glyph(self, raw_cp: str, raw_form: str) -> None:
        try:
            codepoint = int(raw_cp)
        except ValueError:
            self._send_error_json(400, "bad-codepoint", raw_cp)
            return
        form = _parse_form(raw_form)
        if form is None:
            self._send_error_json(400, "bad-form", raw_form)
            return
        atlas = self.context.handle.atlas
        glyph = atlas.glyphs.get((codepoint, form))
        if glyph is None and codepoint == REPLACEMENT_CODEPOINT and form is GlyphForm.ISOLATED:
            glyph = atlas.replacement_glyph
        if glyph is None:
            self._send_error_json(404, "unknown-glyph", f"U+{codepoint:04X}/{form.name}")
            return
        self._send_json(glyph_to_dict(glyph))

    def _get_search(self, query: dict[str, list[str]]) -> None:
        q = query.get("q", [""])[0]
        if not eng.fold_simple(q):
            self._send_error_json(400, "empty-query", "q must not be empty")
            return
        handle = self.context.handle
        matches = eng.search_content(handle.index, handle.open_reader, q)
        self._send_json({"query": q, "matches": [match_to_dict(m) for m in matches]})

    def _get_asset(self, ref: str) -> None:
        data = self.context.load_asset(ref)
        if data is None:
            self._send_error_json(404, "unknown-asset", ref)
            return
        self._send_bytes(data, guess_content_type(ref))

    def _get_session(self, session_id: str) -> None:
        session = self.context.get_session(session_id)
        if session is None:
            self._send_error_json(404, "unknown-session", session_id)
            return
        with session.lock:
            payload = {"session_id": session.session_id,
                       "state": state_to_dict(session.state)}
        self._send_json(payload)

    def _post_session(self) -> None:
        body = self._read_body()
        if body is None:
            self._send_error_json(400, "bad-json", "request body is not valid JSON")
            return
        viewport = DEFAULT_VIEWPORT
        if isinstance(body, dict) and isinstance(body.get("viewport"), dict):
            vp = body["viewport"]
            try:
                viewport = eng.Viewport(int(vp["width"]), int(vp["height"]))
            except (KeyError, TypeError, ValueError):
                self._send_error_json(400, "bad-viewport", str(vp))
                return
        session, effects = self.context.create_session(viewport)
        self._send_json({
            "session_id": session.session_id,
            "state": state_to_dict(session.state),
            "effects": [effect_to_dict(e) for e in effects],
        })

    def _post_event(self, session_id: str) -> None:
        session = self.context.get_session(session_id)
        if session is None:
            self._send_error_json(404, "unknown-session", session_id)
            return
        body = self._read_body()
        if not isinstance(body, dict) or "type" not in body:
            self._send_error_json(400, "bad-event", "body must be {\"type\": ...}")
            return
        try:
            event_type = eng.EventType(body["type"])
        except ValueError:
            self._send_error_json(400, "bad-event", f"unknown event type {body['type']!r}")
            return
        event = eng.Event(event_type, str(body.get("query", "")))
        with session.lock:
            try:
                session.state, effects = eng.handle_event(session.state, event)
            except CodecError as exc:
                self._send_error_json(400, "engine-error", str(exc))
                return
            session.last_event_at = time.monotonic()
            payload = {
                "state": state_to_dict(session.state),
                "effects": [effect_to_dict(e) for e in effects],
            }
        self._send_json(payload)

    # -- static viewer files ----------------------------------------------

    def _serve_static(self, path: str) -> None:
        static_dir = self.context.static_dir
        if static_dir is None:
            self._send_error_json(404, "not-found", path)
            return
        rel = unquote(path).lstrip("/") or "index.html"
        if ".." in rel.split("/"):
            self._send_error_json(404, "not-found", path)
            return
        target = static_dir / rel
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_error_json(404, "not-found", path)
            return
        self._send_bytes(target.read_bytes(), guess_content_type(str(target)))


def make_server(context: ServiceContext, host: str = "127.0.0.1",
                port: int = 0) -> ThreadingHTTPServer:
    """Build the HTTP server; port 0 picks a free one (see server_address)."""
    handler = type("BoundHandler", (_Handler,), {"context": context})
    return ThreadingHTTPServer((host, port), handler)


def run(context: ServiceContext, host: str, port: int) -> None:
    server = make_server(context, host, port)
    address = server.server_address
    print(f"serving on http://{address[0]}:{address[1]}/ (Ctrl-C to stop)", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
