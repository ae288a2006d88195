"""Tiny standalone SVG emitters for path and sweep figures.

Batch-friendly: no display, no heavyweight plotting dependency, output is
plain vector graphics.
"""

from __future__ import annotations

import numpy as np

__all__ = ["polyline_plot", "sweep_plot", "path_projection_plot"]

_COLORS = ["#1f6fb2", "#c03d2e", "#3d8f4e", "#8456a3", "#b07d2b", "#4a4a4a"]


def _scale(points, width, height, margin):
    pts = np.asarray(points, dtype=float)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.where(hi - lo < 1e-12, 1.0, hi - lo)

    def to_px(p):
        x = margin + (p[0] - lo[0]) / span[0] * (width - 2 * margin)
        y = height - margin - (p[1] - lo[1]) / span[1] * (height - 2 * margin)
        return x, y

    return to_px


def _svg_header(width, height):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
    )


def polyline_plot(series, path, width=480, height=360, margin=36, labels=None):
    """Write one SVG with a polyline per (x, y) series."""
    allpts = np.concatenate([np.column_stack([np.asarray(x), np.asarray(y)]) for x, y in series])
    to_px = _scale(allpts, width, height, margin)
    parts = [_svg_header(width, height)]
    for i, (xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{to_px((x, y))[0]:.2f},{to_px((x, y))[1]:.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>\n')
        if labels:
            x0, y0 = to_px((xs[0], ys[0]))
            parts.append(
                f'<text x="{x0 + 4:.1f}" y="{y0 - 4:.1f}" font-size="11" fill="{color}">{labels[i]}</text>\n'
            )
    parts.append("</svg>\n")
    with open(path, "w") as f:
        f.write("".join(parts))


def sweep_plot(xs, means, stds, path, width=480, height=360, margin=40, title=""):
    """Mean curve with vertical one-std whiskers."""
    xs = np.asarray(xs, dtype=float)
    means = np.asarray(means, dtype=float)
    stds = np.asarray(stds, dtype=float)
    pts = np.column_stack(
        [np.concatenate([xs, xs, xs]), np.concatenate([means, means - stds, means + stds])]
    )
    to_px = _scale(pts, width, height, margin)
    parts = [_svg_header(width, height)]
    poly = " ".join(f"{to_px((x, m))[0]:.2f},{to_px((x, m))[1]:.2f}" for x, m in zip(xs, means))
    for x, m, s in zip(xs, means, stds):
        x0, ylo = to_px((x, m - s))
        _, yhi = to_px((x, m + s))
        parts.append(
            f'<line x1="{x0:.2f}" y1="{ylo:.2f}" x2="{x0:.2f}" y2="{yhi:.2f}" '
            f'stroke="#888888" stroke-width="1"/>\n'
        )
    parts.append(f'<polyline points="{poly}" fill="none" stroke="{_COLORS[0]}" stroke-width="2"/>\n')
    for x, m in zip(xs, means):
        px, py = to_px((x, m))
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{_COLORS[0]}"/>\n')
    if title:
        parts.append(f'<text x="{width / 2:.0f}" y="16" font-size="13" text-anchor="middle">{title}</text>\n')
    parts.append("</svg>\n")
    with open(path, "w") as f:
        f.write("".join(parts))


def path_projection_plot(waypoints, path, obstacles=(), width=720, height=360, margin=36):
    """Side-by-side (x, y) and (x, z) projections of a 3D+ waypoint path."""
    W = np.asarray(waypoints, dtype=float)
    if W.shape[1] < 2:
        raise ValueError("need at least 2 coordinates to plot")
    panes = [(0, 1)] if W.shape[1] == 2 else [(0, 1), (0, 2)]
    pane_w = width // len(panes)
    parts = [_svg_header(width, height)]
    for p, (i, j) in enumerate(panes):
        pts2 = W[:, [i, j]]
        extra = [pts2]
        for box in obstacles:
            extra.append(np.array([[box.low[i], box.low[j]], [box.high[i], box.high[j]]]))
        to_px = _scale(np.concatenate(extra), pane_w, height, margin)
        offset = p * pane_w
        for box in obstacles:
            x0, y0 = to_px((box.low[i], box.high[j]))
            x1, y1 = to_px((box.high[i], box.low[j]))
            parts.append(
                f'<rect x="{offset + x0:.1f}" y="{y0:.1f}" width="{x1 - x0:.1f}" '
                f'height="{y1 - y0:.1f}" fill="#d9d9d9" stroke="#999999"/>\n'
            )
        poly = " ".join(
            f"{offset + to_px(pt)[0]:.2f},{to_px(pt)[1]:.2f}" for pt in pts2
        )
        parts.append(f'<polyline points="{poly}" fill="none" stroke="{_COLORS[0]}" stroke-width="2"/>\n')
        sx, sy = to_px(pts2[0])
        gx, gy = to_px(pts2[-1])
        parts.append(f'<circle cx="{offset + sx:.2f}" cy="{sy:.2f}" r="4" fill="{_COLORS[2]}"/>\n')
        parts.append(f'<circle cx="{offset + gx:.2f}" cy="{gy:.2f}" r="4" fill="{_COLORS[1]}"/>\n')
        parts.append(
            f'<text x="{offset + 10}" y="16" font-size="12">axes {i},{j}</text>\n'
        )
    parts.append("</svg>\n")
    with open(path, "w") as f:
        f.write("".join(parts))
