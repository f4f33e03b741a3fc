"""Minimal SVG line/point charts (no plotting dependency)."""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1b7837", "#2166ac", "#e08214", "#762a83", "#b2182b", "#4d4d4d")


@dataclass
class Series:
    name: str
    x: np.ndarray
    y: np.ndarray
    style: str = "line"   # "line", "points" or "both"
    color: str | None = None


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def render(series, title="", xlabel="", ylabel="", width=640, height=420,
           xlim=None, ylim=None) -> str:
    ml, mr, mt, mb = 60, 150, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([np.asarray(s.x, float) for s in series]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(s.y, float) for s in series]) if series else np.zeros(1)
    x0, x1 = xlim if xlim else (float(xs.min()), float(xs.max()))
    y0, y1 = ylim if ylim else (float(ys.min()), float(ys.max()))
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.1f}" y="{mt + ph + 15}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{ml - 5}" y="{py(t) + 4:.1f}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{mt + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {mt + ph / 2})">{escape(ylabel)}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    n_legend = 0
    for k, s in enumerate(series):
        col = s.color or PALETTE[k % len(PALETTE)]
        pts = [(px(a), py(b)) for a, b in zip(np.asarray(s.x, float), np.asarray(s.y, float))]
        if s.style in ("line", "both") and len(pts) > 1:
            d = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        if s.style in ("points", "both"):
            out.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2" fill="{col}" fill-opacity="0.6"/>'
                       for a, b in pts)
        if not s.name:
            continue
        ly = mt + 15 + 16 * n_legend
        n_legend += 1
        out.append(f'<rect x="{ml + pw + 10}" y="{ly - 8}" width="10" height="10" fill="{col}"/>')
        out.append(f'<text x="{ml + pw + 25}" y="{ly + 1}">{escape(s.name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save(path, series, **kw) -> None:
    with open(path, "w") as fh:
        fh.write(render(series, **kw))
