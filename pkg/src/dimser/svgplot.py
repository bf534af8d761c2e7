"""Deterministic SVG scatter plots over the [-1, 1] x [-1, 1] label plane.

Text output with fixed float formatting so identical inputs always give
byte-identical files.
"""

from __future__ import annotations

import numpy as np

_SIZE = 480
_MARGIN = 50
_PLOT = _SIZE - 2 * _MARGIN
_TICKS = (-1.0, -0.5, 0.0, 0.5, 1.0)

GOLD_COLOR = "#4878cf"
PRED_COLOR = "#d65f5f"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _to_px(v: float) -> float:
    # value axis runs -1..1; SVG y grows downward, handled by the caller
    return _MARGIN + (v + 1.0) / 2.0 * _PLOT


def _point_px(x: float, y: float) -> tuple[str, str]:
    return _fmt(_to_px(x)), _fmt(_SIZE - _to_px(y))


def scatter_svg(
    gold: np.ndarray,
    pred: np.ndarray,
    x_label: str = "valence",
    y_label: str = "arousal",
    title: str = "gold vs predicted",
) -> str:
    """Render two (n, 2) point sets as an SVG document string.

    Gold points are filled circles, predictions are open circles; overlapping
    marks are expected and permitted.
    """
    gold = np.asarray(gold, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if gold.ndim != 2 or gold.shape[1] != 2 or pred.shape != gold.shape:
        raise ValueError(f"expected matching (n, 2) arrays, got {gold.shape} and {pred.shape}")
    if np.any(np.abs(gold) > 1.0) or np.any(np.abs(pred) > 1.0):
        raise ValueError("scatter coordinates must lie in [-1, 1]")

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" '
        f'viewBox="0 0 {_SIZE} {_SIZE}">',
        f'<rect width="{_SIZE}" height="{_SIZE}" fill="white"/>',
        f'<text x="{_SIZE // 2}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
    ]
    # frame and gridlines
    x0, x1 = _fmt(_MARGIN), _fmt(_SIZE - _MARGIN)
    for t in _TICKS:
        px = _fmt(_to_px(t))
        py = _fmt(_SIZE - _to_px(t))
        lines.append(f'<line x1="{px}" y1="{x0}" x2="{px}" y2="{x1}" stroke="#dddddd"/>')
        lines.append(f'<line x1="{x0}" y1="{py}" x2="{x1}" y2="{py}" stroke="#dddddd"/>')
        lines.append(
            f'<text x="{px}" y="{_SIZE - _MARGIN + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{t:g}</text>'
        )
        lines.append(
            f'<text x="{_MARGIN - 8}" y="{py}" text-anchor="end" dominant-baseline="middle" '
            f'font-family="sans-serif" font-size="11">{t:g}</text>'
        )
    lines.append(
        f'<rect x="{x0}" y="{x0}" width="{_PLOT}" height="{_PLOT}" fill="none" stroke="#333333"/>'
    )
    lines.append(
        f'<text x="{_SIZE // 2}" y="{_SIZE - 12}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12">{x_label}</text>'
    )
    lines.append(
        f'<text x="16" y="{_SIZE // 2}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 16 {_SIZE // 2})">{y_label}</text>'
    )
    # legend
    lines.append(f'<circle cx="{_SIZE - 150}" cy="40" r="4" fill="{GOLD_COLOR}"/>')
    lines.append(
        f'<text x="{_SIZE - 140}" y="44" font-family="sans-serif" font-size="12">gold</text>'
    )
    lines.append(
        f'<circle cx="{_SIZE - 90}" cy="40" r="4" fill="none" stroke="{PRED_COLOR}" stroke-width="1.5"/>'
    )
    lines.append(
        f'<text x="{_SIZE - 80}" y="44" font-family="sans-serif" font-size="12">predicted</text>'
    )
    for x, y in gold:
        px, py = _point_px(x, y)
        lines.append(f'<circle cx="{px}" cy="{py}" r="3" fill="{GOLD_COLOR}" fill-opacity="0.6"/>')
    for x, y in pred:
        px, py = _point_px(x, y)
        lines.append(
            f'<circle cx="{px}" cy="{py}" r="3" fill="none" stroke="{PRED_COLOR}" '
            f'stroke-width="1.2" stroke-opacity="0.8"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
