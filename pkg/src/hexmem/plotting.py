"""Minimal static SVG plots (log axes, shaded uncertainty bands).

Hand-rolled so plotting stays dependency-free; output is plain SVG 1.1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    label: str
    xs: list[float]
    ys: list[float]
    band_low: list[float] | None = None
    band_high: list[float] | None = None


@dataclass
class LogLogPlot:
    title: str
    x_label: str
    y_label: str
    series: list[Series] = field(default_factory=list)
    width: int = 640
    height: int = 480
    log_x: bool = True
    log_y: bool = True

    def add(self, label, xs, ys, band_low=None, band_high=None) -> None:
        self.series.append(Series(label, list(xs), list(ys),
                                  list(band_low) if band_low else None,
                                  list(band_high) if band_high else None))

    # -- rendering -------------------------------------------------------

    def _ranges(self):
        xs = [x for s in self.series for x in s.xs if x > 0 or not self.log_x]
        ys = [y for s in self.series for y in s.ys if y > 0 or not self.log_y]
        for s in self.series:
            if s.band_low:
                ys += [y for y in s.band_low if y > 0 or not self.log_y]
            if s.band_high:
                ys += [y for y in s.band_high if y > 0 or not self.log_y]
        if not xs or not ys:
            xs, ys = [1.0, 10.0], [1.0, 10.0]
        fx = math.log10 if self.log_x else (lambda v: v)
        fy = math.log10 if self.log_y else (lambda v: v)
        x0, x1 = min(map(fx, xs)), max(map(fx, xs))
        y0, y1 = min(map(fy, ys)), max(map(fy, ys))
        if x0 == x1:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y0 == y1:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad_x = 0.06 * (x1 - x0)
        pad_y = 0.06 * (y1 - y0)
        return (x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y, fx, fy)

    def render(self) -> str:
        margin_l, margin_r, margin_t, margin_b = 70, 20, 40, 50
        iw = self.width - margin_l - margin_r
        ih = self.height - margin_t - margin_b
        x0, x1, y0, y1, fx, fy = self._ranges()

        def px(x):
            return margin_l + (fx(x) - x0) / (x1 - x0) * iw

        def py(y):
            return margin_t + (y1 - fy(y)) / (y1 - y0) * ih

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
            f'<text x="{self.width/2:.0f}" y="22" text-anchor="middle" '
            f'font-size="15" font-family="sans-serif">{_esc(self.title)}</text>',
        ]
        # Axes frame and decade grid lines.
        parts.append(
            f'<rect x="{margin_l}" y="{margin_t}" width="{iw}" height="{ih}" '
            'fill="none" stroke="#444"/>')
        if self.log_x:
            for e in range(math.floor(x0), math.ceil(x1) + 1):
                v = 10.0 ** e
                if x0 <= e <= x1:
                    xp = px(v)
                    parts.append(f'<line x1="{xp:.1f}" y1="{margin_t}" '
                                 f'x2="{xp:.1f}" y2="{margin_t+ih}" '
                                 'stroke="#ddd"/>')
                    parts.append(f'<text x="{xp:.1f}" y="{margin_t+ih+18}" '
                                 'text-anchor="middle" font-size="11" '
                                 f'font-family="sans-serif">1e{e}</text>')
        if self.log_y:
            for e in range(math.floor(y0), math.ceil(y1) + 1):
                v = 10.0 ** e
                if y0 <= e <= y1:
                    yp = py(v)
                    parts.append(f'<line x1="{margin_l}" y1="{yp:.1f}" '
                                 f'x2="{margin_l+iw}" y2="{yp:.1f}" '
                                 'stroke="#ddd"/>')
                    parts.append(f'<text x="{margin_l-6}" y="{yp+4:.1f}" '
                                 'text-anchor="end" font-size="11" '
                                 f'font-family="sans-serif">1e{e}</text>')
        parts.append(
            f'<text x="{margin_l+iw/2:.0f}" y="{self.height-10}" '
            'text-anchor="middle" font-size="13" font-family="sans-serif">'
            f'{_esc(self.x_label)}</text>')
        parts.append(
            f'<text x="16" y="{margin_t+ih/2:.0f}" text-anchor="middle" '
            f'font-size="13" font-family="sans-serif" '
            f'transform="rotate(-90 16 {margin_t+ih/2:.0f})">'
            f'{_esc(self.y_label)}</text>')

        for k, s in enumerate(self.series):
            color = _COLORS[k % len(_COLORS)]
            pts = [(x, y) for x, y in zip(s.xs, s.ys)
                   if (not self.log_x or x > 0) and (not self.log_y or y > 0)]
            if s.band_low and s.band_high:
                ring = []
                for x, y in zip(s.xs, s.band_high):
                    if (not self.log_y or y > 0) and (not self.log_x or x > 0):
                        ring.append((px(x), py(y)))
                for x, y in reversed(list(zip(s.xs, s.band_low))):
                    if (not self.log_y or y > 0) and (not self.log_x or x > 0):
                        ring.append((px(x), py(y)))
                if len(ring) >= 3:
                    path = " ".join(f"{x:.1f},{y:.1f}" for x, y in ring)
                    parts.append(f'<polygon points="{path}" fill="{color}" '
                                 'opacity="0.18"/>')
            if pts:
                path = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in pts)
                parts.append(f'<polyline points="{path}" fill="none" '
                             f'stroke="{color}" stroke-width="1.6"/>')
                for x, y in pts:
                    parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" '
                                 f'r="2.6" fill="{color}"/>')
            ly = margin_t + 16 + 16 * k
            parts.append(f'<line x1="{margin_l+iw-120}" y1="{ly-4}" '
                         f'x2="{margin_l+iw-100}" y2="{ly-4}" '
                         f'stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{margin_l+iw-95}" y="{ly}" font-size="11" '
                         f'font-family="sans-serif">{_esc(s.label)}</text>')
        parts.append("</svg>")
        return "\n".join(parts)

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.render())


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))
