"""Deterministic SVG output: profile line charts and disparity heatmaps.

Hand-written SVG keeps the bytes a pure function of the inputs (no
timestamps or random ids), so reruns diff cleanly.
"""
from __future__ import annotations

from html import escape
from typing import Mapping, Sequence

import numpy as np

HIGHLIGHT = ("#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")
GREY = "#b0b0b0"


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def _label(v: float) -> str:
    return f"{v:.4g}"


def profile_chart(
    variable: str,
    curves: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    selected: Sequence[str] = (),
    *,
    categories: Sequence[str] | None = None,
    width: int = 640,
    height: int = 400,
) -> str:
    """Line chart of every model's profile; ``selected`` models drawn in colour, the rest grey.

    ``curves`` maps model id to ``(x, y)``. For categorical variables pass
    ``categories``; x is then the category position.
    """
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    xs = np.concatenate([np.asarray(c[0], float) for c in curves.values()]) if curves else np.array([0.0, 1.0])
    ys = np.concatenate([np.asarray(c[1], float) for c in curves.values()]) if curves else np.array([0.0, 1.0])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.05, y1 + 0.05
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.2f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">'
        f'Partial dependence: {escape(variable)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    xticks = list(range(len(categories))) if categories is not None else _ticks(x0, x1)
    for i, t in enumerate(xticks):
        label = categories[i] if categories is not None else _label(t)
        out.append(f'<line x1="{_fmt(sx(t))}" y1="{top + ph}" x2="{_fmt(sx(t))}" y2="{top + ph + 5}" stroke="#333"/>')
        out.append(f'<text x="{_fmt(sx(t))}" y="{top + ph + 18}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{escape(str(label))}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{_fmt(sy(t))}" x2="{left}" y2="{_fmt(sy(t))}" stroke="#333"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(sy(t) + 4)}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">{_label(t)}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12">{escape(variable)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
               f'transform="rotate(-90 16 {top + ph / 2:.2f})">mean prediction</text>')

    colour = {mid: HIGHLIGHT[i % len(HIGHLIGHT)] for i, mid in enumerate(selected)}
    # grey first so highlighted curves sit on top
    order = [m for m in curves if m not in colour] + [m for m in selected if m in curves]
    for mid in order:
        x, y = curves[mid]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y))
        stroke = colour.get(mid, GREY)
        w = 2.2 if mid in colour else 1.0
        out.append(f'<polyline fill="none" stroke="{stroke}" stroke-width="{w}" points="{pts}">'
                   f'<title>{escape(mid)}</title></polyline>')
    ly = top + 10
    for mid in selected:
        if mid not in curves:
            continue
        out.append(f'<line x1="{left + pw + 15}" y1="{ly}" x2="{left + pw + 35}" y2="{ly}" stroke="{colour[mid]}" '
                   f'stroke-width="2.2"/>')
        out.append(f'<text x="{left + pw + 40}" y="{ly + 4}" font-family="sans-serif" font-size="12">'
                   f'{escape(mid)}</text>')
        ly += 18
    if len(curves) > len([m for m in selected if m in curves]):
        out.append(f'<line x1="{left + pw + 15}" y1="{ly}" x2="{left + pw + 35}" y2="{ly}" stroke="{GREY}"/>')
        out.append(f'<text x="{left + pw + 40}" y="{ly + 4}" font-family="sans-serif" font-size="12">other</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _shade(v: float, vmax: float) -> str:
    t = 0.0 if vmax <= 0 else min(max(v / vmax, 0.0), 1.0)
    # white -> dark blue; darker means larger disparity
    r = round(255 + t * (8 - 255))
    g = round(255 + t * (48 - 255))
    b = round(255 + t * (107 - 255))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(
    title: str,
    row_labels: Sequence[str],
    col_labels: Sequence[str],
    values: np.ndarray,
    *,
    cell: int = 44,
) -> str:
    """Annotated heatmap; darker cells are larger disparities."""
    values = np.asarray(values, dtype=float)
    left, top = 110, 110
    width = left + cell * len(col_labels) + 20
    height = top + cell * len(row_labels) + 20
    vmax = float(values.max()) if values.size else 0.0
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="10" y="22" font-family="sans-serif" font-size="14">{escape(title)}</text>',
    ]
    for j, c in enumerate(col_labels):
        x = left + j * cell + cell / 2
        out.append(f'<text x="{x:.2f}" y="{top - 8}" font-family="sans-serif" font-size="11" '
                   f'transform="rotate(-60 {x:.2f} {top - 8})">{escape(c)}</text>')
    for i, r in enumerate(row_labels):
        y = top + i * cell
        out.append(f'<text x="{left - 6}" y="{y + cell / 2 + 4:.2f}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">{escape(r)}</text>')
        for j in range(len(col_labels)):
            v = values[i, j]
            fill = _shade(v, vmax)
            ink = "white" if vmax > 0 and v / vmax > 0.55 else "black"
            out.append(f'<rect x="{left + j * cell}" y="{y}" width="{cell}" height="{cell}" fill="{fill}" '
                       f'stroke="white"/>')
            out.append(f'<text x="{left + j * cell + cell / 2:.2f}" y="{y + cell / 2 + 4:.2f}" text-anchor="middle" '
                       f'font-family="sans-serif" font-size="10" fill="{ink}">{v:.2f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
