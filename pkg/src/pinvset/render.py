"""SVG rendering of 2-D partition trees for visual inspection.

Leaf cells are drawn as squares colored by label; an optional polyline
overlay (for a reference set boundary or barrier level set) is drawn on
top.  Output is deterministic: fixed float formatting, no timestamps, leaf
order equals tree creation order.
"""

from __future__ import annotations

from typing import Sequence

from .tree import Label, PartitionTree

FILL = {
    Label.INCLUDED: "#4c72b0",
    Label.EXCLUDED: "#f5f5f5",
    Label.UNKNOWN: "#dd8452",
}


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def render_tree_svg(
    tree: PartitionTree,
    width_px: int = 720,
    overlay: Sequence[Sequence[float]] | None = None,
) -> str:
    """Render leaf squares; y grows upward (world coordinates are flipped)."""
    if tree.dim != 2:
        raise ValueError(f"SVG rendering supports dim 2 only, got dim {tree.dim}")
    roots = [tree.nodes[i] for i in tree.roots]
    xmin = min(n.lo[0] for n in roots)
    ymin = min(n.lo[1] for n in roots)
    xmax = max(n.hi[0] for n in roots)
    ymax = max(n.hi[1] for n in roots)
    scale = width_px / (xmax - xmin)
    height_px = (ymax - ymin) * scale

    def sx(x: float) -> str:
        return _fmt((x - xmin) * scale)

    def sy(y: float) -> str:
        return _fmt((ymax - y) * scale)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(width_px)}" height="{_fmt(height_px)}" '
        f'viewBox="0 0 {_fmt(width_px)} {_fmt(height_px)}">',
        f'<rect x="0" y="0" width="{_fmt(width_px)}" height="{_fmt(height_px)}" '
        'fill="#ffffff"/>',
    ]
    stroke_w = _fmt(max(0.2, scale * 1e-4))
    for i in tree.iter_leaves():
        node = tree.nodes[i]
        w = _fmt((node.hi[0] - node.lo[0]) * scale)
        h = _fmt((node.hi[1] - node.lo[1]) * scale)
        parts.append(
            f'<rect x="{sx(node.lo[0])}" y="{sy(node.hi[1])}" width="{w}" '
            f'height="{h}" fill="{FILL[node.label]}" stroke="#444444" '
            f'stroke-width="{stroke_w}"/>'
        )
    if overlay:
        points = " ".join(f"{sx(float(p[0]))},{sy(float(p[1]))}" for p in overlay)
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="#111111" '
            'stroke-width="1.5"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def load_overlay(path) -> list[tuple[float, float]]:
    """Read polyline vertices from a CSV of x,y rows ('#' lines ignored)."""
    points: list[tuple[float, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            try:
                points.append((float(cells[0]), float(cells[1])))
            except (ValueError, IndexError):
                continue
    return points
