"""Minimal deterministic SVG line charts for PCMS curves."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#7f7f7f"]
MARKERS = ["circle", "square", "diamond", "triangle"]

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 64, 170, 40, 56


def _f(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 6):
    if hi == lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _marker(kind: str, x: float, y: float, color: str) -> str:
    if kind == "circle":
        return f'<circle cx="{_f(x)}" cy="{_f(y)}" r="3" fill="{color}"/>'
    if kind == "square":
        return f'<rect x="{_f(x - 3)}" y="{_f(y - 3)}" width="6" height="6" fill="{color}"/>'
    if kind == "diamond":
        pts = f"{_f(x)},{_f(y - 4)} {_f(x + 4)},{_f(y)} {_f(x)},{_f(y + 4)} {_f(x - 4)},{_f(y)}"
    else:
        pts = f"{_f(x)},{_f(y - 4)} {_f(x + 4)},{_f(y + 3)} {_f(x - 4)},{_f(y + 3)}"
    return f'<polygon points="{pts}" fill="{color}"/>'


def line_chart(x: Sequence[float], series: Sequence[Sequence[float]], labels: Sequence[str],
               title: str = "", xlabel: str = "", ylabel: str = "PCMS", ylim=(0.0, 1.0)) -> str:
    """
    Render one polyline per series over shared x values. Output depends
    only on the arguments, so identical data gives byte-identical SVG.
    """
    x = [float(v) for v in x]
    x_lo, x_hi = min(x), max(x)
    y_lo, y_hi = ylim
    pw = WIDTH - LEFT - RIGHT
    ph = HEIGHT - TOP - BOTTOM

    def sx(v):
        return LEFT + (pw * 0.5 if x_hi == x_lo else (v - x_lo) / (x_hi - x_lo) * pw)

    def sy(v):
        return TOP + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{_f(LEFT + pw / 2)}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for t in _ticks(y_lo, y_hi):
        y = sy(t)
        out.append(f'<line x1="{LEFT}" y1="{_f(y)}" x2="{LEFT + pw}" y2="{_f(y)}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_f(y + 4)}" text-anchor="end">{t:.1f}</text>')
    for t in _ticks(x_lo, x_hi):
        xx = sx(t)
        out.append(f'<line x1="{_f(xx)}" y1="{TOP + ph}" x2="{_f(xx)}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_f(xx)}" y="{TOP + ph + 18}" text-anchor="middle">{t:g}</text>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    if xlabel:
        out.append(f'<text x="{_f(LEFT + pw / 2)}" y="{HEIGHT - 14}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{_f(TOP + ph / 2)}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {_f(TOP + ph / 2)})">{escape(ylabel)}</text>')

    for i, (ys, label) in enumerate(zip(series, labels)):
        color = PALETTE[i % len(PALETTE)]
        marker = MARKERS[i % len(MARKERS)]
        pts = " ".join(f"{_f(sx(a))},{_f(sy(b))}" for a, b in zip(x, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.extend(_marker(marker, sx(a), sy(b), color) for a, b in zip(x, ys))
        ly = TOP + 12 + 18 * i
        lx = LEFT + pw + 14
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" stroke="{color}" stroke-width="1.5"/>')
        out.append(_marker(marker, lx + 11, ly, color))
        out.append(f'<text x="{lx + 28}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
