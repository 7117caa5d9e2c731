// Shared test scaffolding: a DOM without a browser, a recording painter,
// and a scriptable fake of the service protocol behind the real ApiClient.

import { Window } from "happy-dom";

import { ApiClient } from "../src/api.js";
import type { EventDto, StateDto } from "../src/api.js";
import type { GlyphBitmap } from "../src/glyphs.js";
import type { RowPainter } from "../src/render.js";

export function makeDom(): { doc: Document; root: HTMLElement } {
  const window = new Window();
  const doc = window.document as unknown as Document;
  const root = doc.createElement("main");
  doc.body.appendChild(root);
  return { doc, root };
}

export interface PaintCall {
  codepoint: number;
  form: number;
  x: number;
  y: number;
  color: string;
}

export class RecordingPainter implements RowPainter {
  calls: PaintCall[] = [];

  constructor(readonly canvas: HTMLCanvasElement | null = null) {}

  paint(glyph: GlyphBitmap, x: number, y: number, color: string): void {
    this.calls.push({ codepoint: glyph.codepoint, form: glyph.form, x, y, color });
  }
}

export type Route = (init?: RequestInit) => { status?: number; body: unknown } | Promise<{ status?: number; body: unknown }>;

/** A fake service: exact-path routes served through the real ApiClient. */
export class FakeService {
  routes = new Map<string, Route>();
  log: Array<{ path: string; body?: unknown }> = [];

  client(): ApiClient {
    return new ApiClient("", async (input, init) => {
      const route = this.routes.get(input);
      const entry: { path: string; body?: unknown } = { path: input };
      if (init?.body) {
        entry.body = JSON.parse(String(init.body));
      }
      this.log.push(entry);
      if (!route) {
        return jsonResponse({ error: "not-found", detail: input }, 404);
      }
      const result = await route(init);
      return jsonResponse(result.body, result.status ?? 200);
    });
  }

  postedEvents(): EventDto[] {
    return this.log
      .filter((entry) => entry.path.endsWith("/event"))
      .map((entry) => entry.body as EventDto);
  }
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export const INDEX_STATE: StateDto = {
  screen: {
    type: "Index",
    cursor: 0,
    expanded: [],
    rows: [
      { page_id: 1, title: "root", depth: 0, has_children: true },
      { page_id: 7, title: "leaf", depth: 0, has_children: false },
    ],
  },
  media: { audio_index: null, video_index: null, audio_playing: false },
  viewport: { width: 240, height: 320 },
};

export const THEME = {
  colors: { background: "#FFFFFF", text: "#102030", highlight: "#CC3300", header: "#224488" },
  palette: ["#102030"],
  splash_enabled: false,
  splash_image: null,
  background_image: null,
  background_music: null,
};

/** One 8x2 glyph: pixels at (0,0), (7,0), (1,1), (6,1); base64 of 0x81 0x42. */
export const TINY_GLYPH = {
  codepoint: 65,
  form: 0,
  width: 8,
  height: 2,
  x_bearing: 1,
  y_bearing: 2,
  advance: 9,
  bitmap: btoa(String.fromCharCode(0x81, 0x42)),
};
