"""Plain-text tables and minimal self-contained SVG line plots.

Rendering is deterministic: the same inputs always produce byte-identical
output, so workflow artifacts can be compared across runs.
"""

from __future__ import annotations

from typing import Mapping, Sequence

_SVG_WIDTH = 640
_SVG_HEIGHT = 400
_MARGIN = 56
_SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_table(headers: Sequence[str], rows: Sequence[Sequence], title: str | None = None) -> str:
    """Fixed-width table with a header rule; cells are str()-ed."""
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = []
    if title:
        lines.append(title)
    lines.append("  ".join(h.ljust(w) for h, w in zip(cells[0], widths)))
    lines.append("  ".join("-" * w for w in widths))
    for row in cells[1:]:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def _scale(values, lo: float, hi: float, out_lo: float, out_hi: float):
    span = hi - lo
    if span <= 0:
        return [0.5 * (out_lo + out_hi) for _ in values]
    return [out_lo + (v - lo) / span * (out_hi - out_lo) for v in values]


def line_plot_svg(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    title: str,
    xlabel: str,
    ylabel: str,
) -> str:
    """One polyline per named series with shared axes and a small legend."""
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = [y for _, ys in series.values() for y in ys]
    x_lo, x_hi = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    y_lo, y_hi = (min(ys_all), max(ys_all)) if ys_all else (0.0, 1.0)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    left, right = _MARGIN, _SVG_WIDTH - 16
    top, bottom = 32, _SVG_HEIGHT - _MARGIN

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_WIDTH}" height="{_SVG_HEIGHT}" '
        f'viewBox="0 0 {_SVG_WIDTH} {_SVG_HEIGHT}">',
        f'<rect width="{_SVG_WIDTH}" height="{_SVG_HEIGHT}" fill="white"/>',
        f'<text x="{_SVG_WIDTH // 2}" y="20" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
        f'<text x="{(left + right) // 2}" y="{_SVG_HEIGHT - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{(top + bottom) // 2}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 14 {(top + bottom) // 2})">{ylabel}</text>',
        f'<text x="{left - 4}" y="{bottom + 4}" text-anchor="end" font-family="sans-serif" '
        f'font-size="10">{y_lo:.4g}</text>',
        f'<text x="{left - 4}" y="{top + 4}" text-anchor="end" font-family="sans-serif" '
        f'font-size="10">{y_hi:.4g}</text>',
        f'<text x="{left}" y="{bottom + 14}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="10">{x_lo:.4g}</text>',
        f'<text x="{right}" y="{bottom + 14}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="10">{x_hi:.4g}</text>',
    ]
    for k, (name, (xs, ys)) in enumerate(series.items()):
        color = _SERIES_COLORS[k % len(_SERIES_COLORS)]
        px = _scale(xs, x_lo, x_hi, left, right)
        py = _scale(ys, y_lo, y_hi, bottom, top)
        points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        ly = top + 14 + 16 * k
        parts.append(f'<line x1="{right - 120}" y1="{ly - 4}" x2="{right - 96}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="{right - 90}" y="{ly}" font-family="sans-serif" font-size="11">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def convergence_plot_svg(traces: Mapping[str, "object"]) -> str:
    """Objective value per epoch for each channel's winning seed."""
    series = {}
    for channel, trace in traces.items():
        history = trace.best.history
        series[channel] = ([rec.epoch for rec in history], [rec.j for rec in history])
    return line_plot_svg(series, "Objective convergence", "epoch", "J")
