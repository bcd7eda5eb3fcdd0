"""Minimal deterministic SVG charts (polyline, rect, text only)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

PRE_COLOR = "#1f77b4"   # blue: pre-impairment
POST_COLOR = "#2ca02c"  # green: post-impairment
TARGET_COLOR = "#d62728"
GRID_COLOR = "#dddddd"


def _n(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-12 * abs(step):
        ticks.append(float(round(v / step) * step))
        v += step
    return ticks


def _fmt_tick(v: float) -> str:
    return f"{v:.6g}"


@dataclass
class Chart:
    title: str
    xlabel: str = ""
    ylabel: str = ""
    width: int = 480
    height: int = 360
    equal_aspect: bool = False
    margin: tuple[int, int, int, int] = (40, 20, 50, 60)  # top, right, bottom, left
    _items: list[str] = field(default_factory=list)
    _series: list[tuple] = field(default_factory=list)
    _legend: list[tuple[str, str]] = field(default_factory=list)
    _xticks: list[tuple[float, str]] | None = None

    def line(self, xs: Sequence[float], ys: Sequence[float], color: str, label: str | None = None,
             width: float = 1.5, dash: str | None = None) -> "Chart":
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        self._series.append(("line", xs, ys, color, width, dash))
        if label:
            self._legend.append((label, color))
        return self

    def points(self, xs, ys, color: str, label: str | None = None, size: float = 3.0) -> "Chart":
        self._series.append(("points", np.asarray(xs, float), np.asarray(ys, float), color, size, None))
        if label:
            self._legend.append((label, color))
        return self

    def step_hist(self, edges, counts, color: str, label: str | None = None) -> "Chart":
        edges = np.asarray(edges, dtype=float)
        counts = np.asarray(counts, dtype=float)
        xs = np.repeat(edges, 2)[1:-1]
        ys = np.repeat(counts, 2)
        xs = np.concatenate([[edges[0]], xs, [edges[-1]]])
        ys = np.concatenate([[0.0], ys, [0.0]])
        return self.line(xs, ys, color, label)

    def categorical_x(self, labels: Sequence[str]) -> "Chart":
        self._xticks = [(float(i), lab) for i, lab in enumerate(labels)]
        return self

    def _bounds(self):
        xs = [s[1][np.isfinite(s[1])] for s in self._series]
        ys = [s[2][np.isfinite(s[2])] for s in self._series]
        xs = np.concatenate(xs) if xs else np.array([0.0, 1.0])
        ys = np.concatenate(ys) if ys else np.array([0.0, 1.0])
        if xs.size == 0:
            xs = np.array([0.0, 1.0])
        if ys.size == 0:
            ys = np.array([0.0, 1.0])
        x0, x1, y0, y1 = float(xs.min()), float(xs.max()), float(ys.min()), float(ys.max())
        if self._xticks:
            x0, x1 = -0.5, len(self._xticks) - 0.5
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad_y = 0.05 * (y1 - y0)
        y0, y1 = y0 - pad_y, y1 + pad_y
        if self.equal_aspect:
            cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
            half = max(x1 - x0, y1 - y0) / 2
            x0, x1, y0, y1 = cx - half, cx + half, cy - half, cy + half
        return x0, x1, y0, y1

    def render(self) -> str:
        top, right, bottom, left = self.margin
        pw, ph = self.width - left - right, self.height - top - bottom
        if self.equal_aspect:
            pw = ph = min(pw, ph)
        x0, x1, y0, y1 = self._bounds()

        def sx(v):
            return left + (v - x0) / (x1 - x0) * pw

        def sy(v):
            return top + ph - (v - y0) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="white"/>',
            f'<text x="{_n(self.width / 2)}" y="20" text-anchor="middle" font-size="14">{escape(self.title)}</text>',
        ]
        # axes and ticks
        ticks = self._xticks or [(v, _fmt_tick(v)) for v in _nice_ticks(x0, x1)]
        for v, lab in ticks:
            X = sx(v)
            out.append(f'<polyline points="{_n(X)},{_n(top)} {_n(X)},{_n(top + ph)}" stroke="{GRID_COLOR}" fill="none"/>')
            out.append(f'<text x="{_n(X)}" y="{_n(top + ph + 14)}" text-anchor="middle">{escape(lab)}</text>')
        for v in _nice_ticks(y0, y1):
            Y = sy(v)
            out.append(f'<polyline points="{_n(left)},{_n(Y)} {_n(left + pw)},{_n(Y)}" stroke="{GRID_COLOR}" fill="none"/>')
            out.append(f'<text x="{_n(left - 4)}" y="{_n(Y + 4)}" text-anchor="end">{escape(_fmt_tick(v))}</text>')
        out.append(f'<rect x="{_n(left)}" y="{_n(top)}" width="{_n(pw)}" height="{_n(ph)}" fill="none" stroke="black"/>')
        if self.xlabel:
            out.append(f'<text x="{_n(left + pw / 2)}" y="{_n(top + ph + 34)}" text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            yl = top + ph / 2
            out.append(f'<text x="14" y="{_n(yl)}" text-anchor="middle" transform="rotate(-90 14 {_n(yl)})">'
                       f'{escape(self.ylabel)}</text>')

        for kind, xs, ys, color, size, dash in self._series:
            if kind == "line":
                # break the polyline at non-finite values
                ok = np.isfinite(xs) & np.isfinite(ys)
                start = None
                for i in range(len(xs) + 1):
                    if i < len(xs) and ok[i]:
                        if start is None:
                            start = i
                        continue
                    if start is not None and i - start >= 2:
                        pts = " ".join(f"{_n(sx(a))},{_n(sy(b))}" for a, b in zip(xs[start:i], ys[start:i]))
                        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
                        out.append(f'<polyline points="{pts}" stroke="{color}" stroke-width="{_n(size)}" '
                                   f'fill="none"{dash_attr}/>')
                    start = None
            else:
                for a, b in zip(xs, ys):
                    if np.isfinite(a) and np.isfinite(b):
                        out.append(f'<rect x="{_n(sx(a) - size)}" y="{_n(sy(b) - size)}" width="{_n(2 * size)}" '
                                   f'height="{_n(2 * size)}" fill="{color}"/>')
        for k, (label, color) in enumerate(self._legend):
            ly = top + 12 + 14 * k
            lx = left + pw - 120
            out.append(f'<rect x="{_n(lx)}" y="{_n(ly - 8)}" width="10" height="10" fill="{color}"/>')
            out.append(f'<text x="{_n(lx + 14)}" y="{_n(ly + 1)}">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def side_by_side(charts: Sequence[Chart]) -> str:
    """Place rendered charts next to each other in one SVG document."""
    width = sum(c.width for c in charts)
    height = max(c.height for c in charts)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">']
    x = 0
    for c in charts:
        inner = c.render().replace('<svg xmlns="http://www.w3.org/2000/svg" ', f'<svg x="{x}" y="0" ', 1)
        parts.append(inner.rstrip("\n"))
        x += c.width
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
