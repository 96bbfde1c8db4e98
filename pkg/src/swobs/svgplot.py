"""Minimal static SVG line plots: polylines, linear or log-y axes, legend.

Direct generation keeps figure output dependency-free and byte-reproducible,
which the CLI's idempotence contract relies on.
"""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple

import numpy as np

_COLORS = ["#1f6fb2", "#d2542c", "#3a8f3d", "#8048a0", "#b0a114", "#58575a"]

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 62, 16, 30, 44


def _nice_ticks(lo: float, hi: float, target: int = 6) -> List[float]:
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.6g}"


def line_plot(path, series: Sequence[Tuple[np.ndarray, np.ndarray, str]],
              title: str = "", xlabel: str = "", ylabel: str = "",
              logy: bool = False, size: Tuple[int, int] = (720, 460)) -> None:
    """Write a polyline plot of (x, y, label) series to an SVG file."""
    width, height = size
    x_lo = min(float(np.min(x)) for x, _, _ in series)
    x_hi = max(float(np.max(x)) for x, _, _ in series)
    plotted = []
    if logy:
        floor = None
        for _, y, _ in series:
            positive = np.asarray(y)[np.asarray(y) > 0.0]
            if positive.size:
                lo = float(np.min(positive))
                floor = lo if floor is None else min(floor, lo)
        floor = floor if floor is not None else 1e-300
        for x, y, label in series:
            plotted.append((np.asarray(x, dtype=float),
                            np.log10(np.maximum(np.asarray(y, dtype=float), floor)),
                            label))
    else:
        plotted = [(np.asarray(x, dtype=float), np.asarray(y, dtype=float), lab)
                   for x, y, lab in series]
    y_lo = min(float(np.min(y)) for _, y, _ in plotted)
    y_hi = max(float(np.max(y)) for _, y, _ in plotted)
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    pad = 0.04 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    px0, px1 = _MARGIN_L, width - _MARGIN_R
    py0, py1 = height - _MARGIN_B, _MARGIN_T

    def sx(v):
        return px0 + (v - x_lo) / (x_hi - x_lo) * (px1 - px0)

    def sy(v):
        return py0 + (v - y_lo) / (y_hi - y_lo) * (py1 - py0)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{title}</text>',
    ]
    for tv in _nice_ticks(x_lo, x_hi):
        X = sx(tv)
        out.append(f'<line x1="{X:.2f}" y1="{py0}" x2="{X:.2f}" y2="{py1}" '
                   'stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{X:.2f}" y="{py0 + 16}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="10">{_fmt(tv)}</text>')
    for tv in _nice_ticks(y_lo, y_hi):
        Y = sy(tv)
        label = f"1e{tv:.0f}" if logy else _fmt(tv)
        out.append(f'<line x1="{px0}" y1="{Y:.2f}" x2="{px1}" y2="{Y:.2f}" '
                   'stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{px0 - 6}" y="{Y + 3:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="10">{label}</text>')
    out.append(f'<rect x="{px0}" y="{py1}" width="{px1 - px0}" height="{py0 - py1}" '
               'fill="none" stroke="#333333" stroke-width="1"/>')
    for i, (x, y, label) in enumerate(plotted):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   'stroke-width="1.4"/>')
        ly = _MARGIN_T + 14 + 14 * i
        out.append(f'<line x1="{px1 - 120}" y1="{ly - 4}" x2="{px1 - 96}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{px1 - 90}" y="{ly}" font-family="sans-serif" '
                   f'font-size="10">{label}</text>')
    out.append(f'<text x="{(px0 + px1) / 2:.1f}" y="{height - 10}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="11">{xlabel}</text>')
    out.append(f'<text x="14" y="{(py0 + py1) / 2:.1f}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="11" '
               f'transform="rotate(-90 14 {(py0 + py1) / 2:.1f})">{ylabel}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
