"""Painting shaped text and simple fills onto an RGB pixel grid."""

from __future__ import annotations

from dataclasses import dataclass

from .glyphs import Glyph
from .shaping import LayoutResult, PositionedGlyph

RGB = tuple[int, int, int]


class RasterError(ValueError):
    """Raised when a layout does not fit the target canvas."""


@dataclass
class Canvas:
    """A width x height RGB raster backed by a flat byte buffer."""

    width: int
    height: int
    pixels: bytearray

    @classmethod
    def filled(cls, width: int, height: int, color: RGB) -> "Canvas":
        pixels = bytearray(bytes(color) * (width * height))
        return cls(width, height, pixels)

    def pixel(self, x: int, y: int) -> RGB:
        i = (y * self.width + x) * 3
        return (self.pixels[i], self.pixels[i + 1], self.pixels[i + 2])

    def set_pixel(self, x: int, y: int, color: RGB) -> None:
        if 0 <= x < self.width and 0 <= y < self.height:
            i = (y * self.width + x) * 3
            self.pixels[i:i + 3] = bytes(color)

    def fill_rect(self, x0: int, y0: int, w: int, h: int, color: RGB) -> None:
        for y in range(max(0, y0), min(self.height, y0 + h)):
            for x in range(max(0, x0), min(self.width, x0 + w)):
                self.set_pixel(x, y, color)

    def blit_glyph(self, glyph: Glyph, x: int, y: int, color: RGB) -> None:
        """Paint the glyph's set bits; (x, y) is the bitmap's top-left."""
        for gy in range(glyph.height):
            for gx in range(glyph.width):
                if glyph.pixel(gx, gy):
                    self.set_pixel(x + gx, y + gy, color)

    def to_ppm(self) -> bytes:
        header = f"P6\n{self.width} {self.height}\n255\n".encode("ascii")
        return header + bytes(self.pixels)

    def rows(self) -> list[list[RGB]]:
        return [[self.pixel(x, y) for x in range(self.width)] for y in range(self.height)]


def draw_layout(canvas: Canvas, layout: LayoutResult,
                offset_x: int = 0, offset_y: int = 0, check: bool = False) -> None:
    """Blit every positioned glyph of ``layout`` onto ``canvas``.

    With ``check`` set, a glyph whose bitmap would leave the canvas raises
    RasterError instead of being clipped.
    """
    for line in layout.lines:
        for pg in line:
            x = offset_x + pg.x + pg.glyph.x_bearing
            y = offset_y + pg.y + pg.glyph.y_bearing
            if check and (x < 0 or y < 0 or x + pg.glyph.width > canvas.width
                          or y + pg.glyph.height > canvas.height):
                raise RasterError(
                    f"glyph U+{pg.codepoint:04X}/{pg.form.name} at ({x}, {y}) "
                    f"exceeds the {canvas.width}x{canvas.height} canvas"
                )
            canvas.blit_glyph(pg.glyph, x, y, pg.color)


def rasterize(layout: LayoutResult, canvas_width: int, canvas_height: int,
              background: RGB) -> Canvas:
    """Render a layout onto a fresh background-filled canvas.

    Raises RasterError, naming the offending glyph, if the layout extends
    past the canvas.
    """
    canvas = Canvas.filled(canvas_width, canvas_height, background)
    draw_layout(canvas, layout, check=True)
    return canvas


def parse_ppm(data: bytes) -> Canvas:
    """Read a binary P6 image back into a Canvas (test helper)."""
    if not data.startswith(b"P6"):
        raise ValueError("not a P6 ppm")
    parts = data.split(b"\n", 3)
    width, height = (int(v) for v in parts[1].split())
    if parts[2] != b"255":
        raise ValueError("unsupported max value")
    pixels = bytearray(parts[3])
    if len(pixels) != width * height * 3:
        raise ValueError("pixel payload size mismatch")
    return Canvas(width, height, pixels)
