"""Deterministic, self-contained SVG line plots.

Rendering is pure string assembly with fixed formatting, so identical inputs
produce byte-identical files — no timestamps, generated ids, or external
assets. Intended for training-curve figures: epoch on x, a cost in [0, 1]
on y, one polyline per labeled series, solid or dashed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = ["LINE_STYLES", "Series", "render_line_plot"]

LINE_STYLES = ("solid", "dashed")

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_WIDTH, _HEIGHT = 720, 480
_MARGIN_LEFT, _MARGIN_RIGHT, _MARGIN_TOP, _MARGIN_BOTTOM = 64, 180, 40, 48


@dataclass(frozen=True)
class Series:
    """One labeled curve; points with non-finite y values are skipped."""

    label: str
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    style: str = "solid"

    def __post_init__(self) -> None:
        if len(self.xs) != len(self.ys):
            raise ValueError(
                f"series {self.label!r} has {len(self.xs)} x values "
                f"but {len(self.ys)} y values"
            )
        if self.style not in LINE_STYLES:
            raise ValueError(f"style must be one of {LINE_STYLES}, got {self.style!r}")
        object.__setattr__(self, "xs", tuple(float(x) for x in self.xs))
        object.__setattr__(self, "ys", tuple(float(y) for y in self.ys))

    def finite_points(self) -> list[tuple[float, float]]:
        return [(x, y) for x, y in zip(self.xs, self.ys) if math.isfinite(y)]


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def render_line_plot(
    series: Sequence[Series],
    title: str = "",
    x_label: str = "epoch",
    y_label: str = "held-out fidelity",
    y_range: tuple[float, float] = (0.0, 1.0),
) -> str:
    """Render the series to an SVG document string."""
    if not series:
        raise ValueError("need at least one series to plot")
    y_lo, y_hi = y_range
    if not y_hi > y_lo:
        raise ValueError(f"invalid y range {y_range}")
    x_hi = max((max(s.xs) for s in series if s.xs), default=1.0)
    x_hi = max(x_hi, 1.0)

    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def px(x: float) -> float:
        return _MARGIN_LEFT + (x / x_hi) * plot_w

    def py(y: float) -> float:
        return _MARGIN_TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>',
    ]
    if title:
        lines.append(
            f'<text x="{_fmt(_MARGIN_LEFT + plot_w / 2)}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{_escape(title)}</text>'
        )

    num_y_ticks = 5
    for i in range(num_y_ticks + 1):
        y_val = y_lo + (y_hi - y_lo) * i / num_y_ticks
        y_pix = py(y_val)
        lines.append(
            f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(y_pix)}" '
            f'x2="{_fmt(_MARGIN_LEFT + plot_w)}" y2="{_fmt(y_pix)}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        lines.append(
            f'<text x="{_fmt(_MARGIN_LEFT - 8)}" y="{_fmt(y_pix + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{_fmt(y_val)}</text>'
        )
    num_x_ticks = 5
    for i in range(num_x_ticks + 1):
        x_val = x_hi * i / num_x_ticks
        x_pix = px(x_val)
        lines.append(
            f'<line x1="{_fmt(x_pix)}" y1="{_fmt(_MARGIN_TOP + plot_h)}" '
            f'x2="{_fmt(x_pix)}" y2="{_fmt(_MARGIN_TOP + plot_h + 5)}" '
            f'stroke="#333333" stroke-width="1"/>'
        )
        lines.append(
            f'<text x="{_fmt(x_pix)}" y="{_fmt(_MARGIN_TOP + plot_h + 20)}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">'
            f"{_fmt(x_val).rstrip('0').rstrip('.')}</text>"
        )

    lines.append(
        f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(_MARGIN_TOP)}" '
        f'x2="{_fmt(_MARGIN_LEFT)}" y2="{_fmt(_MARGIN_TOP + plot_h)}" '
        f'stroke="#333333" stroke-width="1"/>'
    )
    lines.append(
        f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(_MARGIN_TOP + plot_h)}" '
        f'x2="{_fmt(_MARGIN_LEFT + plot_w)}" y2="{_fmt(_MARGIN_TOP + plot_h)}" '
        f'stroke="#333333" stroke-width="1"/>'
    )
    lines.append(
        f'<text x="{_fmt(_MARGIN_LEFT + plot_w / 2)}" y="{_HEIGHT - 10}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13">'
        f"{_escape(x_label)}</text>"
    )
    lines.append(
        f'<text x="{_MARGIN_LEFT}" y="{_MARGIN_TOP - 10}" text-anchor="start" '
        f'font-family="sans-serif" font-size="13">{_escape(y_label)}</text>'
    )

    for idx, s in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        dash = ' stroke-dasharray="6,4"' if s.style == "dashed" else ""
        points = s.finite_points()
        if points:
            coords = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in points)
            lines.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} '
                f'points="{coords}"/>'
            )
        legend_x = _MARGIN_LEFT + plot_w + 16
        legend_y = _MARGIN_TOP + 14 + 18 * idx
        lines.append(
            f'<line x1="{_fmt(legend_x)}" y1="{_fmt(legend_y)}" '
            f'x2="{_fmt(legend_x + 26)}" y2="{_fmt(legend_y)}" '
            f'stroke="{color}" stroke-width="1.5"{dash}/>'
        )
        lines.append(
            f'<text x="{_fmt(legend_x + 32)}" y="{_fmt(legend_y + 4)}" '
            f'font-family="sans-serif" font-size="12">{_escape(s.label)}</text>'
        )

    lines.append("</svg>")
    return "\n".join(lines) + "\n"
