// Typed client for the preview service REST API. The viewer never decides
// engine behavior itself; every state shown comes back from these calls.

export interface TreeNode {
  id: number;
  title: string;
  children: TreeNode[];
}

export interface IndexRowDto {
  page_id: number;
  title: string;
  depth: number;
  has_children: boolean;
}

export interface SearchMatchDto {
  page_id: number;
  item_index: number;
  char_offset: number;
  snippet: string;
}

export type ScreenDto =
  | { type: "Splash" }
  | { type: "Index"; cursor: number; expanded: number[]; rows: IndexRowDto[] }
  | { type: "Page"; page_id: number; title: string; scroll_offset: number; total_height: number }
  | { type: "SearchResults"; query: string; cursor: number; results: SearchMatchDto[] };

export interface MediaDto {
  audio_index: number | null;
  video_index: number | null;
  audio_playing: boolean;
}

export interface StateDto {
  screen: ScreenDto;
  media: MediaDto;
  viewport: { width: number; height: number };
}

export interface EffectDto {
  type: string;
  asset_ref?: string;
  kind?: string;
  payload?: string;
  url?: string;
  number?: string;
}

export interface EventDto {
  type: string;
  query?: string;
}

export interface GlyphDto {
  codepoint: number;
  form: number;
  width: number;
  height: number;
  x_bearing: number;
  y_bearing: number;
  advance: number;
  bitmap: string; // base64, 1 bit per pixel, rows padded to whole bytes
}

export interface LayoutGlyphDto {
  codepoint: number;
  form: number;
  x: number;
  y: number;
  w: number;
  h: number;
  color: string;
}

export interface LayoutRowDto {
  item_index: number;
  kind: string;
  top: number;
  height: number;
  ordinal?: number;
  lines?: LayoutGlyphDto[][];
}

export interface PageLayoutDto {
  page_id: number;
  width: number;
  line_height: number;
  total_height: number;
  rows: LayoutRowDto[];
}

export interface ThemeDto {
  colors: { background: string; text: string; highlight: string; header: string };
  palette: string[];
  splash_enabled: boolean;
  splash_image: string | null;
  background_image: string | null;
  background_music: string | null;
}

export interface SessionCreatedDto {
  session_id: string;
  state: StateDto;
  effects: EffectDto[];
}

export interface EventResultDto {
  state: StateDto;
  effects: EffectDto[];
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly code: string, detail: string) {
    super(`${code}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  assetUrl(ref: string): string {
    return `${this.base}/api/asset/${ref}`;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`, init);
    if (!response.ok) {
      let code = `http-${response.status}`;
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { error?: string; detail?: string };
        code = body.error ?? code;
        detail = body.detail ?? detail;
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(response.status, code, detail);
    }
    return (await response.json()) as T;
  }

  tree(): Promise<{ roots: TreeNode[] }> {
    return this.request("/api/tree");
  }

  theme(): Promise<ThemeDto> {
    return this.request("/api/theme");
  }

  layout(pageId: number, width: number): Promise<PageLayoutDto> {
    return this.request(`/api/page/${pageId}/layout?width=${width}`);
  }

  glyph(codepoint: number, form: number): Promise<GlyphDto> {
    return this.request(`/api/font/glyph/${codepoint}/${form}`);
  }

  search(query: string): Promise<{ query: string; matches: SearchMatchDto[] }> {
    return this.request(`/api/search?q=${encodeURIComponent(query)}`);
  }

  createSession(viewport: { width: number; height: number }): Promise<SessionCreatedDto> {
    return this.request("/api/session", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ viewport }),
    });
  }

  getSession(sessionId: string): Promise<{ session_id: string; state: StateDto }> {
    return this.request(`/api/session/${sessionId}`);
  }

  postEvent(sessionId: string, event: EventDto): Promise<EventResultDto> {
    return this.request(`/api/session/${sessionId}/event`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(event),
    });
  }
}
