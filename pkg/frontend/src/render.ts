// Screen rendering. Everything shown derives from the last engine state
// returned by the service; the only client-side drawing knowledge is how
// to blit a glyph bitmap at the coordinates the layout endpoint computed.

import type {
  IndexRowDto,
  LayoutRowDto,
  PageLayoutDto,
  ScreenDto,
  SearchMatchDto,
  StateDto,
  ThemeDto,
} from "./api.js";
import type { GlyphBitmap, GlyphCache } from "./glyphs.js";
import { glyphPixel } from "./glyphs.js";

export interface RowPainter {
  paint(glyph: GlyphBitmap, x: number, y: number, color: string): void;
}

export class CanvasPainter implements RowPainter {
  constructor(private readonly ctx: CanvasRenderingContext2D) {}

  paint(glyph: GlyphBitmap, x: number, y: number, color: string): void {
    this.ctx.fillStyle = color;
    for (let gy = 0; gy < glyph.height; gy++) {
      for (let gx = 0; gx < glyph.width; gx++) {
        if (glyphPixel(glyph, gx, gy)) {
          this.ctx.fillRect(x + gx, y + gy, 1, 1);
        }
      }
    }
  }
}

/** Blit one text row: each glyph lands at its layout position plus its
 * bearings, in layout order. Y coordinates are row-local. */
export async function paintTextRow(
  painter: RowPainter,
  row: LayoutRowDto,
  glyphs: GlyphCache,
): Promise<void> {
  for (const line of row.lines ?? []) {
    for (const glyph of line) {
      const bitmap = await glyphs.get(glyph.codepoint, glyph.form);
      painter.paint(bitmap, glyph.x + bitmap.xBearing, glyph.y + bitmap.yBearing, glyph.color);
    }
  }
}

export interface RenderDeps {
  doc: Document;
  glyphs: GlyphCache;
  theme: ThemeDto;
  makePainter(canvas: HTMLCanvasElement): RowPainter;
  onTreeRowClick(index: number): void;
  onSearchResultClick(index: number): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function renderSplash(deps: RenderDeps): HTMLElement {
  const box = el(deps.doc, "div", "screen splash");
  box.style.background = deps.theme.colors.header;
  box.appendChild(el(deps.doc, "div", "splash-note", "loading… press Enter"));
  if (deps.theme.splash_image) {
    const img = el(deps.doc, "img", "splash-image");
    img.src = `/api/asset/${deps.theme.splash_image}`;
    box.appendChild(img);
  }
  return box;
}

function renderIndex(
  deps: RenderDeps,
  screen: { cursor: number; rows: IndexRowDto[]; expanded: number[] },
): HTMLElement {
  const box = el(deps.doc, "div", "screen index");
  const list = el(deps.doc, "ul", "tree");
  screen.rows.forEach((row, i) => {
    const item = el(deps.doc, "li", i === screen.cursor ? "tree-row cursor" : "tree-row");
    item.style.paddingRight = `${row.depth * 14 + 4}px`; // RTL tree indents from the right
    const marker = row.has_children
      ? (screen.expanded.includes(row.page_id) ? "▾ " : "◂ ")
      : "• ";
    item.textContent = marker + row.title;
    item.dataset.pageId = String(row.page_id);
    item.dataset.row = String(i);
    item.addEventListener("click", () => deps.onTreeRowClick(i));
    list.appendChild(item);
  });
  box.appendChild(list);
  return box;
}

const MEDIA_ICONS: Record<string, string> = {
  image: "\u{1f5bc}",
  audio: "♪",
  video: "▶",
  phone: "☎",
  email: "@",
  weblink: "\u{1f517}",
};

export function renderPageRows(
  deps: RenderDeps,
  layout: PageLayoutDto,
  media: { audio_index: number | null; video_index: number | null },
): { container: HTMLElement; painted: Promise<void> } {
  const container = el(deps.doc, "div", "page-rows");
  const painting: Promise<void>[] = [];
  for (const row of layout.rows) {
    if (row.kind === "text") {
      const canvas = el(deps.doc, "canvas", "text-row") as HTMLCanvasElement;
      canvas.width = layout.width;
      canvas.height = row.height;
      canvas.dataset.itemIndex = String(row.item_index);
      container.appendChild(canvas);
      painting.push(paintTextRow(deps.makePainter(canvas), row, deps.glyphs));
      continue;
    }
    const selected =
      (row.kind === "audio" && row.ordinal === media.audio_index) ||
      (row.kind === "video" && row.ordinal === media.video_index);
    const rowEl = el(deps.doc, "div", selected ? "media-row selected" : "media-row");
    rowEl.style.height = `${row.height}px`;
    rowEl.dataset.itemIndex = String(row.item_index);
    const icon = el(deps.doc, "span", `icon icon-${row.kind}`, MEDIA_ICONS[row.kind] ?? "?");
    if (selected) {
      icon.style.color = deps.theme.colors.highlight;
    }
    rowEl.appendChild(icon);
    container.appendChild(rowEl);
  }
  return { container, painted: Promise.all(painting).then(() => undefined) };
}

function renderSearchResults(
  deps: RenderDeps,
  screen: { query: string; cursor: number; results: SearchMatchDto[] },
): HTMLElement {
  const box = el(deps.doc, "div", "screen search-results");
  box.appendChild(el(deps.doc, "div", "search-query", `“${screen.query}”`));
  if (!screen.results.length) {
    box.appendChild(el(deps.doc, "div", "no-results", "no matches"));
    return box;
  }
  const list = el(deps.doc, "ul", "results");
  screen.results.forEach((match, i) => {
    const item = el(deps.doc, "li", i === screen.cursor ? "result cursor" : "result");
    item.dataset.pageId = String(match.page_id);
    item.dataset.row = String(i);
    item.textContent = `p.${match.page_id} — ${match.snippet}`;
    item.addEventListener("click", () => deps.onSearchResultClick(i));
    list.appendChild(item);
  });
  box.appendChild(list);
  return box;
}

export interface RenderedScreen {
  element: HTMLElement;
  /** resolves when all text rows finished blitting */
  painted: Promise<void>;
}

export function renderScreen(
  deps: RenderDeps,
  state: StateDto,
  pageLayout: PageLayoutDto | null,
): RenderedScreen {
  const screen: ScreenDto = state.screen;
  if (screen.type === "Splash") {
    return { element: renderSplash(deps), painted: Promise.resolve() };
  }
  if (screen.type === "Index") {
    return { element: renderIndex(deps, screen), painted: Promise.resolve() };
  }
  if (screen.type === "SearchResults") {
    return { element: renderSearchResults(deps, screen), painted: Promise.resolve() };
  }
  const box = el(deps.doc, "div", "screen page");
  box.style.background = deps.theme.colors.background;
  const header = el(deps.doc, "div", "page-header", screen.title);
  header.style.background = deps.theme.colors.header;
  header.style.color = deps.theme.colors.background;
  box.appendChild(header);
  if (!pageLayout) {
    box.appendChild(el(deps.doc, "div", "page-loading", "…"));
    return { element: box, painted: Promise.resolve() };
  }
  const { container, painted } = renderPageRows(deps, pageLayout, state.media);
  const viewportBox = el(deps.doc, "div", "page-viewport");
  viewportBox.style.height = `${state.viewport.height}px`;
  viewportBox.appendChild(container);
  viewportBox.scrollTop = screen.scroll_offset;
  box.appendChild(viewportBox);
  return { element: box, painted };
}
