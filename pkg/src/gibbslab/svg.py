"""Dependency-free SVG renderings of lattice snapshots and Steiner trees."""

from __future__ import annotations

import numpy as np

from .lattice import Box, BoundaryCondition

PALETTE = ["#ffffff", "#2b6cb0", "#e53e3e", "#38a169", "#d69e2e", "#805ad5", "#dd6b20", "#319795"]


def _color(v: int) -> str:
    return PALETTE[int(v) % len(PALETTE)]


def lattice_slice(box: Box, spins: np.ndarray, axis: int = 1, index: int | None = None) -> np.ndarray:
    """2D array of spins; 3D boxes are cut at ``index`` along ``axis`` (default: the middle)."""
    grid = np.asarray(spins).reshape(box.shape)
    if box.d == 2:
        return grid
    if box.d != 3:
        raise ValueError("snapshots support d = 2 or 3")
    lo, hi = box.ranges[axis]
    index = (lo + hi) // 2 if index is None else index
    return np.take(grid, index - lo, axis=axis)


def lattice_svg(box: Box, spins: np.ndarray, bc: BoundaryCondition | None = None, cell: int = 8,
                axis: int = 1, index: int | None = None) -> str:
    """Cells coloured per spin; the first array axis runs left to right, the last bottom to top."""
    grid = lattice_slice(box, spins, axis, index)
    nx, ny = grid.shape
    pad = 1 if bc is not None and box.d == 2 else 0
    w, h = (nx + 2 * pad) * cell, (ny + 2 * pad) * cell
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">']
    if pad:
        for site, v in zip(box.boundary, bc.values):
            i, j = site[0] - box.ranges[0][0] + 1, site[1] - box.ranges[1][0] + 1
            out.append(f'<rect x="{i * cell}" y="{h - (j + 1) * cell}" width="{cell}" height="{cell}" '
                       f'fill="{_color(v)}" opacity="0.5"/>')
    for i in range(nx):
        for j in range(ny):
            out.append(f'<rect x="{(i + pad) * cell}" y="{h - (j + pad + 1) * cell}" width="{cell}" '
                       f'height="{cell}" fill="{_color(grid[i, j])}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def steiner_svg(trees, regions: dict | None = None, size: int = 300) -> str:
    """Square, both bar trees (solid best, dashed other) and optional region polygons."""
    pad = 20
    s = size - 2 * pad

    def xy(p):
        return pad + p[0] * s, size - pad - p[1] * s

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
           f'<rect x="{pad}" y="{pad}" width="{s}" height="{s}" fill="none" stroke="#000"/>']
    for color, polys in (regions or {}).items():
        for poly in polys:
            geoms = getattr(poly, "geoms", [poly])
            for g in geoms:
                if g.is_empty or g.geom_type != "Polygon":
                    continue
                pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in (xy(c) for c in g.exterior.coords))
                out.append(f'<polygon points="{pts}" fill="{_color(color)}" opacity="0.35"/>')
    best = trees.best
    for tree in (trees.vertical, trees.horizontal):
        dash = "" if tree is best else ' stroke-dasharray="6,4"'
        pts = tree.points
        for i, j in tree.edges:
            (x1, y1), (x2, y2) = xy(pts[i]), xy(pts[j])
            out.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" stroke="#000" '
                       f'stroke-width="2"{dash}/>')
    for p in best.terminals:
        x, y = xy(p)
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="#000"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(text: str, path) -> None:
    with open(path, "w") as fh:
        fh.write(text)
