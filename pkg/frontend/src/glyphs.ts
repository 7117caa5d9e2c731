// Glyph bitmaps come from the service as base64-packed 1-bpp rows. The
// cache guarantees one fetch per (codepoint, form); a cached glyph is
// byte-identical to a fresh fetch because the bytes are stored as decoded.

import type { ApiClient, GlyphDto } from "./api.js";

export interface GlyphBitmap {
  codepoint: number;
  form: number;
  width: number;
  height: number;
  xBearing: number;
  yBearing: number;
  advance: number;
  packed: Uint8Array;
}

export function decodeBase64(data: string): Uint8Array {
  const binary = atob(data);
  const out = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) {
    out[i] = binary.charCodeAt(i);
  }
  return out;
}

export function decodeGlyph(dto: GlyphDto): GlyphBitmap {
  const packed = decodeBase64(dto.bitmap);
  const expected = dto.height * Math.ceil(dto.width / 8);
  if (packed.length !== expected) {
    throw new Error(
      `glyph U+${dto.codepoint.toString(16)}: bitmap has ${packed.length} bytes, expected ${expected}`,
    );
  }
  return {
    codepoint: dto.codepoint,
    form: dto.form,
    width: dto.width,
    height: dto.height,
    xBearing: dto.x_bearing,
    yBearing: dto.y_bearing,
    advance: dto.advance,
    packed,
  };
}

export function glyphPixel(glyph: GlyphBitmap, x: number, y: number): boolean {
  if (x < 0 || y < 0 || x >= glyph.width || y >= glyph.height) {
    return false;
  }
  const stride = Math.ceil(glyph.width / 8);
  const byte = glyph.packed[y * stride + (x >> 3)] ?? 0;
  return (byte & (0x80 >> (x & 7))) !== 0;
}

export class GlyphCache {
  private entries = new Map<string, Promise<GlyphBitmap>>();

  constructor(private readonly api: ApiClient) {}

  get(codepoint: number, form: number): Promise<GlyphBitmap> {
    const key = `${codepoint}/${form}`;
    let entry = this.entries.get(key);
    if (!entry) {
      entry = this.api.glyph(codepoint, form).then(decodeGlyph);
      this.entries.set(key, entry);
    }
    return entry;
  }

  get size(): number {
    return this.entries.size;
  }
}
