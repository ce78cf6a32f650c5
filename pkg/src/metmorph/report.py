"""SVG renderers for ROC/PR curves, coefficient bars and the screen heatmap.

Plots are plain hand-emitted SVG so the toolkit needs no plotting dependency;
the CSV point data is always written alongside, making the figures optional.
"""

from __future__ import annotations

import math

_MARGIN = 50.0
_PLOT = 400.0


def _svg_header(width, height):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" '
        f'height="{height:g}" viewBox="0 0 {width:g} {height:g}">\n'
        f'<rect width="{width:g}" height="{height:g}" fill="white"/>\n'
    )


def _axes(title, xlabel, ylabel):
    x0, y0 = _MARGIN, _MARGIN + _PLOT
    x1, y1 = _MARGIN + _PLOT, _MARGIN
    parts = [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2}" y="{y0 + 35}" text-anchor="middle" font-size="13">{xlabel}</text>',
        f'<text x="{x0 - 35}" y="{(y0 + y1) / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 {x0 - 35} {(y0 + y1) / 2})">{ylabel}</text>',
        f'<text x="{(x0 + x1) / 2}" y="{y1 - 15}" text-anchor="middle" font-size="15">{title}</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        px = x0 + frac * _PLOT
        py = y0 - frac * _PLOT
        parts.append(
            f'<text x="{px:.1f}" y="{y0 + 16}" text-anchor="middle" font-size="10">{frac:g}</text>'
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{py + 3:.1f}" text-anchor="end" font-size="10">{frac:g}</text>'
        )
    return "\n".join(parts) + "\n"


def _polyline(xy, color):
    pts = " ".join(
        f"{_MARGIN + x * _PLOT:.2f},{_MARGIN + _PLOT - y * _PLOT:.2f}" for x, y in xy
    )
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>\n'


def render_roc_svg(points, auc: float, title: str = "ROC") -> str:
    """points: (fpr, tpr, threshold) rows from roc_points."""
    xy = [(p[0], p[1]) for p in points]
    if not xy or xy[-1] != (1.0, 1.0):
        xy.append((1.0, 1.0))
    svg = _svg_header(_PLOT + 2 * _MARGIN, _PLOT + 2 * _MARGIN)
    svg += _axes(f"{title} (AUC = {auc:.3f})", "False positive rate", "True positive rate")
    svg += _polyline([(0.0, 0.0), (1.0, 1.0)], "#bbbbbb")
    svg += _polyline(xy, "#1f5fa8")
    return svg + "</svg>\n"


def render_pr_svg(points, ap: float, title: str = "Precision-Recall") -> str:
    """points: (recall, precision, threshold) rows from pr_curve."""
    xy = [(p[0], p[1]) for p in points]
    svg = _svg_header(_PLOT + 2 * _MARGIN, _PLOT + 2 * _MARGIN)
    svg += _axes(f"{title} (AP = {ap:.3f})", "Recall", "Precision")
    svg += _polyline(xy, "#a8351f")
    return svg + "</svg>\n"


def render_coefficients_svg(named_coefficients, title: str = "Model coefficients") -> str:
    """Horizontal bar chart of (feature, coefficient), most negative first."""
    items = sorted(named_coefficients, key=lambda t: t[1])
    if not items:
        return _svg_header(400, 80) + "<text x='20' y='40'>no nonzero coefficients</text></svg>\n"
    bar_h = 14.0
    gap = 4.0
    height = 2 * _MARGIN + len(items) * (bar_h + gap)
    width = 760.0
    plot_w = 320.0
    cx = 380.0  # zero line
    biggest = max(abs(v) for _, v in items)
    svg = _svg_header(width, height)
    svg += f'<text x="{width / 2}" y="25" text-anchor="middle" font-size="15">{title}</text>\n'
    svg += f'<line x1="{cx}" y1="{_MARGIN - 10}" x2="{cx}" y2="{height - _MARGIN + 10}" stroke="black"/>\n'
    y = _MARGIN
    for name, value in items:
        w = plot_w * abs(value) / biggest if biggest > 0 else 0.0
        x = cx - w if value < 0 else cx
        color = "#1f5fa8" if value < 0 else "#a8351f"
        svg += f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{bar_h}" fill="{color}"/>\n'
        anchor = "end" if value < 0 else "start"
        tx = cx - w - 6 if value < 0 else cx + w + 6
        svg += (
            f'<text x="{tx:.2f}" y="{y + bar_h - 3:.2f}" text-anchor="{anchor}" '
            f'font-size="10">{name} ({value:+.3f})</text>\n'
        )
        y += bar_h + gap
    return svg + "</svg>\n"


def _diverging_color(value, limit):
    """Blue-white-red scale clipped at +-limit."""
    if math.isnan(value):
        return "#dddddd"
    t = max(-1.0, min(1.0, value / limit))
    if t >= 0:
        r, g, b = 255, int(255 * (1 - t)), int(255 * (1 - t))
    else:
        r, g, b = int(255 * (1 + t)), int(255 * (1 + t)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def render_heatmap_svg(rows, title: str = "Significant features") -> str:
    """rows: dicts with feature, band and the three normalized group medians."""
    if not rows:
        return _svg_header(400, 80) + "<text x='20' y='40'>no significant features</text></svg>\n"
    cell_w, cell_h = 90.0, 13.0
    label_w = 330.0
    groups = ("median_wild_type", "median_amplified", "median_exon14")
    width = label_w + len(groups) * cell_w + 2 * _MARGIN
    height = 2 * _MARGIN + len(rows) * cell_h + 30
    limit = max(
        (abs(r[g]) for r in rows for g in groups if not math.isnan(r[g])), default=1.0
    )
    limit = limit or 1.0
    svg = _svg_header(width, height)
    svg += f'<text x="{width / 2}" y="25" text-anchor="middle" font-size="15">{title}</text>\n'
    for gi, g in enumerate(groups):
        gx = _MARGIN + label_w + gi * cell_w + cell_w / 2
        name = g.replace("median_", "").replace("_", " ")
        svg += f'<text x="{gx:.1f}" y="{_MARGIN - 8}" text-anchor="middle" font-size="11">{name}</text>\n'
    y = _MARGIN
    prev_band = rows[0]["band"]
    for row in rows:
        if row["band"] != prev_band:
            svg += (
                f'<line x1="{_MARGIN}" y1="{y:.1f}" x2="{width - _MARGIN}" y2="{y:.1f}" '
                f'stroke="#2a8a2a" stroke-width="2"/>\n'
            )
            prev_band = row["band"]
        svg += (
            f'<text x="{_MARGIN + label_w - 8}" y="{y + cell_h - 3:.1f}" text-anchor="end" '
            f'font-size="9">{row["feature"]}</text>\n'
        )
        for gi, g in enumerate(groups):
            color = _diverging_color(row[g], limit)
            svg += (
                f'<rect x="{_MARGIN + label_w + gi * cell_w:.1f}" y="{y:.1f}" '
                f'width="{cell_w}" height="{cell_h}" fill="{color}" stroke="#f0f0f0"/>\n'
            )
        y += cell_h
    return svg + "</svg>\n"
