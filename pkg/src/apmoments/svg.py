"""Histogram SVG with an optional mixture overlay, written without a plotting library."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 500
_MARGIN = 50


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def emit_histogram(
    values: Sequence[float],
    bins: int = 40,
    V: float | None = None,
    title: str = "",
) -> str:
    """Render an empirical histogram as a self-contained SVG document.

    Exact zeros are drawn as a separate spike at 0 whose height is their
    mass, so the atom of a mixed law is visible next to the continuous part.
    When ``V`` is given, the curve (1/2) N(0, 2V) density is overlaid; with
    ``V=None`` the curve is omitted.

    Raises:
        ValueError: for an empty input or bins < 1.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("need at least one value")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    zero = v == 0
    zero_mass = float(zero.mean())
    rest = v[~zero]

    span = float(np.abs(v).max()) if v.size else 0.0
    if V is not None and V > 0:
        span = max(span, 4 * math.sqrt(2 * V))
    span = span or 1.0
    lo, hi = -span, span

    counts, edges = np.histogram(rest, bins=bins, range=(lo, hi))
    width = edges[1] - edges[0]
    # Density normalised by the full sample, so bars integrate to 1 - zero_mass.
    dens = counts / (v.size * width)
    curve_x = np.linspace(lo, hi, 400)
    curve_y = None
    if V is not None and V > 0:
        curve_y = 0.5 * np.exp(-(curve_x**2) / (4 * V)) / math.sqrt(4 * math.pi * V)
    top = max(float(dens.max(initial=0.0)), float(curve_y.max()) if curve_y is not None else 0.0)
    top = top or 1.0

    pw, ph = WIDTH - 2 * _MARGIN, HEIGHT - 2 * _MARGIN

    def sx(x: float) -> float:
        return _MARGIN + (x - lo) / (hi - lo) * pw

    def sy(y: float) -> float:
        return HEIGHT - _MARGIN - min(y / top, 1.0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{_MARGIN}" y1="{HEIGHT - _MARGIN}" x2="{WIDTH - _MARGIN}" '
        f'y2="{HEIGHT - _MARGIN}" stroke="black"/>',
    ]
    if title:
        parts.append(f'<text x="{WIDTH / 2}" y="25" text-anchor="middle" font-size="16">{escape(title)}</text>')
    for c, d, left in zip(counts, dens, edges[:-1]):
        if c == 0:
            continue
        x0, x1 = sx(left), sx(left + width)
        parts.append(
            f'<rect class="bar" x="{_fmt(x0)}" y="{_fmt(sy(d))}" width="{_fmt(x1 - x0)}" '
            f'height="{_fmt(sy(0) - sy(d))}" fill="#8fb3d9" stroke="#3a6ea5"/>'
        )
    if zero_mass > 0:
        # The atom is drawn with its mass as height on the right-hand axis scale.
        y_spike = HEIGHT - _MARGIN - zero_mass * ph
        parts.append(
            f'<line class="spike" x1="{_fmt(sx(0))}" y1="{_fmt(sy(0))}" x2="{_fmt(sx(0))}" '
            f'y2="{_fmt(y_spike)}" stroke="#c0392b" stroke-width="3"/>'
        )
        parts.append(
            f'<text x="{_fmt(sx(0) + 6)}" y="{_fmt(y_spike + 12)}" font-size="12" fill="#c0392b">'
            f"mass {zero_mass:.3f} at 0</text>"
        )
    if curve_y is not None:
        pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(curve_x, curve_y))
        parts.append(f'<polyline class="curve" points="{pts}" fill="none" stroke="#27ae60" stroke-width="2"/>')
    for tick in np.linspace(lo, hi, 5):
        parts.append(
            f'<text x="{_fmt(sx(tick))}" y="{HEIGHT - _MARGIN + 18}" text-anchor="middle" '
            f'font-size="12">{tick:.3g}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
