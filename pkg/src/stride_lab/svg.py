"""Minimal deterministic SVG emission (rect/circle/polyline/line/text only).

Hand-rolled so benchmark artifacts stay byte-identical across platforms;
all coordinates are formatted with fixed precision.
"""

from __future__ import annotations


def _f(x: float) -> str:
    return f"{x:.2f}"


class SvgCanvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self._parts: list[str] = []

    def rect(self, x, y, w, h, fill="none", stroke="none", opacity=None):
        op = f' fill-opacity="{_f(opacity)}"' if opacity is not None else ""
        self._parts.append(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
            f'fill="{fill}" stroke="{stroke}"{op}/>'
        )

    def circle(self, cx, cy, r, fill="black", stroke="none"):
        self._parts.append(
            f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(r)}" fill="{fill}" stroke="{stroke}"/>'
        )

    def line(self, x1, y1, x2, y2, stroke="black", width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self._parts.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="{stroke}" stroke-width="{_f(width)}"{d}/>'
        )

    def polyline(self, points, stroke="black", width=1.0):
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in points)
        self._parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{_f(width)}"/>'
        )

    def text(self, x, y, s, size=11, anchor="start", fill="#333"):
        self._parts.append(
            f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" font-family="sans-serif" '
            f'text-anchor="{anchor}" fill="{fill}">{s}</text>'
        )

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">\n'
        )
        return head + "\n".join(self._parts) + "\n</svg>\n"


class Axes:
    """Maps data coordinates into a margin-padded screen box (y grows up)."""

    def __init__(self, canvas: SvgCanvas, xlim, ylim, margin=45):
        self.c = canvas
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.m = margin
        if self.x1 <= self.x0 or self.y1 <= self.y0:
            raise ValueError("degenerate axis limits")

    def sx(self, x):
        return self.m + (x - self.x0) / (self.x1 - self.x0) * (self.c.width - 2 * self.m)

    def sy(self, y):
        return self.c.height - self.m - (y - self.y0) / (self.y1 - self.y0) * (self.c.height - 2 * self.m)

    def frame(self, xlabel="", ylabel=""):
        m, w, h = self.m, self.c.width, self.c.height
        self.c.rect(m, m, w - 2 * m, h - 2 * m, stroke="#888")
        if xlabel:
            self.c.text(w / 2, h - 8, xlabel, anchor="middle")
        if ylabel:
            self.c.text(10, m - 8, ylabel)
        self.c.text(m, h - m + 14, f"{self.x0:g}", anchor="middle", size=9)
        self.c.text(w - m, h - m + 14, f"{self.x1:g}", anchor="middle", size=9)
        self.c.text(m - 4, h - m, f"{self.y0:g}", anchor="end", size=9)
        self.c.text(m - 4, m + 4, f"{self.y1:g}", anchor="end", size=9)

    def polyline(self, xs, ys, **kw):
        self.c.polyline([(self.sx(x), self.sy(y)) for x, y in zip(xs, ys)], **kw)

    def circle(self, x, y, r, **kw):
        self.c.circle(self.sx(x), self.sy(y), r, **kw)
