"""SVG output for a laid-out scene."""
from __future__ import annotations

import colorsys
from dataclasses import dataclass

from .layout import Scene, TreeLayout

HUES = {"red": 0.0, "blue": 0.6}


class RenderConfigError(ValueError):
    pass


def lightness_palette(hue: float, k: int, sat: float = 0.7) -> list:
    """k hex colors of one hue, darkest first."""
    if k == 1:
        steps = [0.6]
    else:
        steps = [0.42 + 0.4 * j / (k - 1) for j in range(k)]
    out = []
    for lt in steps:
        r, g, b = colorsys.hls_to_rgb(hue, lt, sat)
        out.append("#%02x%02x%02x" % (round(r * 255), round(g * 255), round(b * 255)))
    return out


@dataclass
class RenderConfig:
    width: float = 1200.0
    height: float = 700.0
    margin: float = 24.0
    red: list | None = None  # palette for the first map's hedges and active paths
    blue: list | None = None
    grid_opacity: float = 0.15
    tree_stroke: float = 1.5
    grid_stroke: float = 1.0
    active_fraction: float = 0.6  # of the active column width
    glyph_scale: float = 1.6
    min_bar: float = 0.005  # zero-height bars drawn this tall, as a fraction of the plot height
    max_unit: float = 24.0  # px per inactive column width at most; small scenes are centered

    def validate(self, n_colors: int = 3):
        if not (self.width > 2 * self.margin and self.height > 2 * self.margin and self.margin >= 0):
            raise RenderConfigError(f"degenerate canvas {self.width}x{self.height} with margin {self.margin}")
        if not 0 <= self.grid_opacity <= 1:
            raise RenderConfigError("grid opacity must lie in [0, 1]")
        if self.max_unit <= 0 or self.tree_stroke <= 0 or self.grid_stroke <= 0 or self.active_fraction <= 0:
            raise RenderConfigError("stroke widths must be positive")
        for name in ("red", "blue"):
            pal = getattr(self, name)
            if pal is not None and len(pal) < n_colors:
                raise RenderConfigError(f"{name} palette has {len(pal)} colors, need {n_colors}")

    def palette(self, hue: str, k: int) -> list:
        pal = getattr(self, hue)
        return list(pal) if pal is not None else lightness_palette(HUES[hue], k)


def _f(x: float) -> str:
    s = "%.3f" % x
    return "0.000" if s == "-0.000" else s


class _Frame:
    def __init__(self, s: Scene, c: RenderConfig):
        units = s.right.offset + s.right.width
        avail = c.width - 2 * c.margin
        self.sx = min(avail / units, c.max_unit)
        self.m = c.margin + (avail - units * self.sx) / 2
        self.my = c.margin
        self.plot_h = c.height - 2 * c.margin
        self.top, self.bottom = s.cap, s.floor
        self.eps = c.min_bar * self.plot_h

    def x(self, u):
        return self.m + u * self.sx

    def y(self, h):
        return self.my + (self.top - h) / (self.top - self.bottom) * self.plot_h


def _hedge_path(lay: TreeLayout, h, fr: _Frame) -> str:
    cols = lay.columns
    yt = fr.y(h.top)
    ys = [max(fr.y(b.bottom), yt + fr.eps) for b in h.bars]
    parts = [f"M{_f(fr.x(cols[h.first].x0))} {_f(yt)}", f"H{_f(fr.x(cols[h.last].x1))}", f"V{_f(ys[-1])}"]
    for k in range(len(h.bars) - 1, 0, -1):
        parts.append(f"H{_f(fr.x(cols[h.bars[k].column].x0))}")
        if ys[k - 1] != ys[k]:
            parts.append(f"V{_f(ys[k - 1])}")
    parts.append(f"H{_f(fr.x(cols[h.first].x0))}Z")
    return "".join(parts)


def render_svg(s: Scene, c: RenderConfig | None = None) -> bytes:
    """Draw hedges, grid, tree, active paths and glyphs, in that order."""
    c = c or RenderConfig()
    c.validate(s.palette_size)
    fr = _Frame(s, c)
    w, h = _f(c.width), _f(c.height)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        "<style>"
        ".hedge{stroke:none}"
        f".grid{{stroke:#000000;stroke-opacity:{_f(c.grid_opacity)};stroke-width:{_f(c.grid_stroke)}}}"
        f".tree{{stroke:#000000;stroke-width:{_f(c.tree_stroke)};fill:none;stroke-linecap:square}}"
        ".active{fill:none;stroke-linecap:butt}"
        ".glyph{stroke:none}"
        "</style>",
    ]
    lays = (s.left, s.right)

    out.append('<g id="hedges">')
    for lay in lays:
        pal = c.palette(lay.hedge_hue, s.palette_size)
        for hd in lay.hedges:
            out.append(f'<path class="hedge" fill="{pal[hd.color]}" d="{_hedge_path(lay, hd, fr)}"/>')
    out.append("</g>")

    out.append('<g id="grid">')
    x0, x1 = _f(fr.x(0)), _f(fr.x(s.right.offset + s.right.width))
    for g in s.grid:
        y = _f(fr.y(g))
        out.append(f'<line class="grid" x1="{x0}" y1="{y}" x2="{x1}" y2="{y}"/>')
    out.append("</g>")

    out.append('<g id="tree">')
    for lay in lays:
        for st in lay.strokes:
            x = _f(fr.x(lay.columns[st.column].x))
            out.append(f'<line class="tree" x1="{x}" y1="{_f(fr.y(st.lo))}" x2="{x}" y2="{_f(fr.y(st.hi))}"/>')
        for cn in lay.connectors:
            y = _f(fr.y(cn.height))
            xa, xb = _f(fr.x(lay.columns[cn.col_lo].x)), _f(fr.x(lay.columns[cn.col_hi].x))
            out.append(f'<line class="tree" x1="{xa}" y1="{y}" x2="{xb}" y2="{y}"/>')
    out.append("</g>")

    # active stroke width from the active column width, shared by both trees
    aw = c.active_fraction * max((col.width for lay in lays for col in lay.columns if col.active), default=0)
    sw = aw * fr.sx
    side = c.glyph_scale * sw
    out.append('<g id="active">')
    for lay in lays:
        pal = c.palette(lay.glyph_hue, s.palette_size)
        for gl in lay.glyphs:
            x = _f(fr.x(lay.columns[gl.column].x))
            out.append(f'<line class="active" stroke="{pal[gl.color]}" stroke-width="{_f(sw)}" '
                       f'x1="{x}" y1="{_f(fr.y(gl.lo))}" x2="{x}" y2="{_f(fr.y(gl.hi))}"/>')
    out.append("</g>")

    out.append('<g id="glyphs">')
    for lay in lays:
        pal = c.palette(lay.glyph_hue, s.palette_size)
        for gl in lay.glyphs:
            x = fr.x(lay.columns[gl.column].x) - side / 2
            y = fr.y(gl.hi) - side / 2
            out.append(f'<rect class="glyph" fill="{pal[gl.color]}" x="{_f(x)}" y="{_f(y)}" '
                       f'width="{_f(side)}" height="{_f(side)}"/>')
    out.append("</g>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode()
