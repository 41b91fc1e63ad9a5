"""Standalone SVG rendering of attributions (no plotting dependency)."""
from __future__ import annotations

import numpy as np

from .explainers import Attribution

_POS_FILL = "#4878a8"
_NEG_FILL = "#b2555b"
_ROOT_STROKE = "#c22f2f"


def attribution_svg(attr: Attribution, variable_names=None, roots=None,
                    top_k: int = 8, width: int = 640, bar_height: int = 22,
                    title: str | None = None) -> str:
    """Horizontal bar chart of the top-k variables by |contribution|.

    Bars are signed around a central zero axis; known root-cause variables get
    an outlined bar. Output is deterministic for fixed inputs.
    """
    contributions = attr.contributions
    names = variable_names or [f"x{i + 1}" for i in range(attr.n_variables)]
    roots = set(int(i) for i in (roots or ()))
    order = attr.ranking()[: max(1, int(top_k))]
    k = len(order)

    label_w = 90
    value_w = 86
    gap = 6
    plot_w = width - label_w - value_w
    top_pad = 28 if title else 8
    height = top_pad + k * (bar_height + gap) + 8
    vmax = float(np.abs(contributions[order]).max())
    if vmax <= 0.0:
        vmax = 1.0
    half = plot_w / 2.0
    x_zero = label_w + half

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="monospace" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{label_w}" y="18" font-size="13">{title}</text>')
    parts.append(
        f'<line x1="{x_zero:.1f}" y1="{top_pad}" x2="{x_zero:.1f}" '
        f'y2="{height - 6}" stroke="#999" stroke-width="1"/>'
    )
    for row, i in enumerate(order):
        value = float(contributions[i])
        y = top_pad + row * (bar_height + gap)
        length = abs(value) / vmax * (half - 4)
        x = x_zero - length if value < 0 else x_zero
        fill = _NEG_FILL if value < 0 else _POS_FILL
        outline = (
            f' stroke="{_ROOT_STROKE}" stroke-width="2.5"' if int(i) in roots else ""
        )
        parts.append(
            f'<rect x="{x:.1f}" y="{y}" width="{max(length, 0.5):.1f}" '
            f'height="{bar_height}" fill="{fill}"{outline}/>'
        )
        parts.append(
            f'<text x="4" y="{y + bar_height - 6}">{names[int(i)]}</text>'
        )
        parts.append(
            f'<text x="{label_w + plot_w + 4}" y="{y + bar_height - 6}">'
            f"{value:.4g}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts)
