// The view model. One session, one ordered event queue, and a rendered
// screen that always mirrors the last state the service returned; the
// client never anticipates what the engine will do.

import { ApiClient, ApiError } from "./api.js";
import type { EffectDto, EventDto, PageLayoutDto, StateDto, ThemeDto } from "./api.js";
import type { AudioSink } from "./audio.js";
import { GlyphCache } from "./glyphs.js";
import { renderScreen, type RowPainter } from "./render.js";

export interface AppOptions {
  api: ApiClient;
  audio: AudioSink;
  doc: Document;
  root: HTMLElement;
  makePainter(canvas: HTMLCanvasElement): RowPainter;
  viewport?: { width: number; height: number };
  toastMillis?: number;
}

export class App {
  readonly api: ApiClient;
  readonly glyphs: GlyphCache;
  sessionId: string | null = null;
  state: StateDto | null = null;
  theme: ThemeDto | null = null;

  private readonly audio: AudioSink;
  private readonly doc: Document;
  private readonly root: HTMLElement;
  private readonly makePainter: (canvas: HTMLCanvasElement) => RowPainter;
  private readonly viewport: { width: number; height: number };
  private readonly toastMillis: number;
  private chain: Promise<void> = Promise.resolve();
  private layoutCache = new Map<number, Promise<PageLayoutDto>>();

  constructor(options: AppOptions) {
    this.api = options.api;
    this.audio = options.audio;
    this.doc = options.doc;
    this.root = options.root;
    this.makePainter = options.makePainter;
    this.viewport = options.viewport ?? { width: 240, height: 320 };
    this.toastMillis = options.toastMillis ?? 4000;
    this.glyphs = new GlyphCache(this.api);
  }

  async start(): Promise<void> {
    this.theme = await this.api.theme();
    const created = await this.api.createSession(this.viewport);
    this.sessionId = created.session_id;
    this.state = created.state;
    this.runEffects(created.effects);
    await this.render();
  }

  /** Queue an engine event; events post strictly one at a time, in order. */
  dispatch(event: EventDto): Promise<void> {
    const next = this.chain.then(() => this.process(event));
    // keep the chain alive even when a step fails
    this.chain = next.catch(() => undefined);
    return next;
  }

  /** Resolves once every queued event has been fully applied. */
  flush(): Promise<void> {
    return this.chain;
  }

  private async process(event: EventDto): Promise<void> {
    if (!this.sessionId) {
      return;
    }
    let result;
    try {
      result = await this.api.postEvent(this.sessionId, event);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        // session expired server-side: start a fresh one, drop the event
        const created = await this.api.createSession(this.viewport);
        this.sessionId = created.session_id;
        this.state = created.state;
        this.toast("session expired, started a new one");
        await this.render();
        return;
      }
      this.toast(`request failed: ${String(error)}`);
      return; // view stays on the last good state
    }
    this.state = result.state;
    this.runEffects(result.effects);
    await this.render();
  }

  private runEffects(effects: EffectDto[]): void {
    for (const effect of effects) {
      switch (effect.type) {
        case "PlayAudio":
          this.audio.play(this.api.assetUrl(effect.asset_ref ?? ""));
          break;
        case "StopAudio":
          this.audio.stop();
          break;
        case "PlayBackgroundMusic":
          this.audio.playMusic(this.api.assetUrl(effect.asset_ref ?? ""));
          break;
        case "PlayVideo":
          this.toast(`video: ${effect.asset_ref}`);
          break;
        case "ComposeMessage":
          this.toast(`compose ${effect.kind ?? "message"}: ${effect.payload ?? ""}`);
          break;
        case "OpenLink":
          this.toast(`open link: ${effect.url ?? ""}`);
          break;
        case "DialNumber":
          this.toast(`dial: ${effect.number ?? ""}`);
          break;
        default:
          this.toast(`effect: ${effect.type}`);
      }
    }
  }

  toast(message: string): void {
    const node = this.doc.createElement("div");
    node.className = "toast";
    node.textContent = message;
    this.root.appendChild(node);
    setTimeout(() => node.remove(), this.toastMillis);
  }

  private pageLayout(pageId: number): Promise<PageLayoutDto> {
    let cached = this.layoutCache.get(pageId);
    if (!cached) {
      cached = this.api.layout(pageId, this.viewport.width);
      this.layoutCache.set(pageId, cached);
    }
    return cached;
  }

  async render(): Promise<void> {
    if (!this.state || !this.theme) {
      return;
    }
    let layout: PageLayoutDto | null = null;
    if (this.state.screen.type === "Page") {
      layout = await this.pageLayout(this.state.screen.page_id);
    }
    const rendered = renderScreen(
      {
        doc: this.doc,
        glyphs: this.glyphs,
        theme: this.theme,
        makePainter: this.makePainter,
        onTreeRowClick: (i) => void this.clickRow(i),
        onSearchResultClick: (i) => void this.clickRow(i),
      },
      this.state,
      layout,
    );
    const old = this.root.querySelector(".screen");
    if (old) {
      old.remove();
    }
    this.root.appendChild(rendered.element);
    await rendered.painted;
  }

  /** Click-to-navigate: walk the cursor to the clicked row with Up/Down
   * events, then Select. Pure event posting, no engine rules here. */
  clickRow(rowIndex: number): Promise<void> {
    const screen = this.state?.screen;
    let cursor = 0;
    if (screen?.type === "Index" || screen?.type === "SearchResults") {
      cursor = screen.cursor;
    }
    const step = rowIndex > cursor ? "Down" : "Up";
    for (let i = 0; i < Math.abs(rowIndex - cursor); i++) {
      void this.dispatch({ type: step });
    }
    return this.dispatch({ type: "Select" });
  }

  submitSearch(query: string): Promise<void> {
    return this.dispatch({ type: "SearchSubmit", query });
  }

  handleKey(key: string): Promise<void> | undefined {
    const mapping: Record<string, string> = {
      ArrowUp: "Up",
      ArrowDown: "Down",
      Enter: "Select",
      Backspace: "Back",
      a: "ToggleAudio",
      v: "ToggleVideo",
      s: "Share",
    };
    const type = mapping[key];
    return type ? this.dispatch({ type }) : undefined;
  }
}
