"""Tiny native SVG line plots (no plotting dependency).

Renders one or more series, optionally with a shaded min/max band, onto a
fixed-size canvas with linear axes and tick labels.  Good enough for run
trajectories and sweep bands.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    band: tuple[Sequence[float], Sequence[float]] | None = None  # (lo, hi)


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1000 or abs(v) < 0.01:
        return f"{v:.2e}"
    return f"{v:.4g}"


def line_plot(
    series: Sequence[Series],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    width: int = 720,
    height: int = 440,
) -> str:
    """Return an SVG document plotting the series."""
    margin_l, margin_r, margin_t, margin_b = 70, 20, 36, 52
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b

    xs = [float(v) for s in series for v in s.x]
    ys = [float(v) for s in series for v in s.y]
    for s in series:
        if s.band is not None:
            ys.extend(float(v) for v in s.band[0])
            ys.extend(float(v) for v in s.band[1])
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(v: float) -> float:
        return margin_l + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return margin_t + (1.0 - (v - y_lo) / (y_hi - y_lo)) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#444"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
            f'font-size="14">{title}</text>'
        )
    for tx in _ticks(x_lo, x_hi):
        parts.append(
            f'<line x1="{px(tx):.1f}" y1="{margin_t + plot_h}" x2="{px(tx):.1f}" '
            f'y2="{margin_t + plot_h + 5}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{px(tx):.1f}" y="{margin_t + plot_h + 18}" '
            f'text-anchor="middle">{_fmt(tx)}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{margin_l - 5}" y1="{py(ty):.1f}" x2="{margin_l}" '
            f'y2="{py(ty):.1f}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{margin_l - 8}" y="{py(ty) + 4:.1f}" '
            f'text-anchor="end">{_fmt(ty)}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{margin_l + plot_w / 2:.1f}" y="{height - 12}" '
            f'text-anchor="middle">{xlabel}</text>'
        )
    if ylabel:
        cx, cy = 16, margin_t + plot_h / 2
        parts.append(
            f'<text x="{cx}" y="{cy:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 {cx} {cy:.1f})">{ylabel}</text>'
        )

    for k, s in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        if s.band is not None:
            lo, hi = s.band
            pts_hi = [f"{px(float(x)):.2f},{py(float(v)):.2f}" for x, v in zip(s.x, hi)]
            pts_lo = [
                f"{px(float(x)):.2f},{py(float(v)):.2f}"
                for x, v in zip(reversed(list(s.x)), reversed(list(lo)))
            ]
            parts.append(
                f'<polygon points="{" ".join(pts_hi + pts_lo)}" fill="{color}" '
                'opacity="0.18" stroke="none"/>'
            )
        pts = [f"{px(float(x)):.2f},{py(float(v)):.2f}" for x, v in zip(s.x, s.y)]
        parts.append(
            f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
            'stroke-width="1.6"/>'
        )
        legend_y = margin_t + 16 + 16 * k
        parts.append(
            f'<line x1="{margin_l + 8}" y1="{legend_y - 4}" x2="{margin_l + 32}" '
            f'y2="{legend_y - 4}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{margin_l + 38}" y="{legend_y}">{s.label}</text>')
    parts.append("</svg>")
    return "\n".join(parts)
