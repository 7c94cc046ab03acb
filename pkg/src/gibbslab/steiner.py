"""Four-terminal Steiner trees on a square under a planar norm.

The quadrant condition colours the right, top, left and bottom sides, so
interfaces end at the four corners.  Two symmetric bar topologies compete:
a vertical bar (Steiner points ``(s/2, a)`` and ``(s/2, s-a)``) splitting the
square into left and right, and the horizontal bar obtained by rotation.
The faces of each tree give the coloured phases; their symmetric differences
are where single sites feel which tree was chosen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.optimize import minimize_scalar
from scipy.spatial import ConvexHull
from shapely.geometry import Polygon
from shapely.ops import polylabel

from .lattice import Box

SIDES = ("right", "top", "left", "bottom")
DEFAULT_COLORS = {"right": 1, "top": 2, "left": 3, "bottom": 4}


class NormError(ValueError):
    """A norm table that does not come from a convex unit ball."""


class DegenerateOverlap(ValueError):
    """Faces of one tree overlap or fail to cover the square."""


@dataclass(frozen=True)
class Norm2D:
    kind: str
    weights: tuple = (1.0, 1.0)
    facets: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __call__(self, v) -> np.ndarray | float:
        v = np.asarray(v, dtype=float)
        if self.kind == "euclidean":
            out = np.hypot(v[..., 0], v[..., 1])
        elif self.kind == "axis-weighted":
            out = np.hypot(self.weights[0] * v[..., 0], self.weights[1] * v[..., 1])
        else:
            # gauge of the convex hull: max over facets n . v / b
            out = np.max(v @ self.facets[:, :2].T / self.facets[:, 2], axis=-1)
            out = np.maximum(out, 0.0)
        return float(out) if out.ndim == 0 else out


def euclidean() -> Norm2D:
    return Norm2D("euclidean")


def axis_weighted(wx: float, wy: float) -> Norm2D:
    """``sqrt((wx x)^2 + (wy y)^2)``; unequal weights break the square's rotation symmetry."""
    if wx <= 0 or wy <= 0:
        raise NormError("weights must be positive")
    return Norm2D("axis-weighted", (float(wx), float(wy)))


def table_norm(angles, values, rtol: float = 1e-9) -> Norm2D:
    """Norm from samples ``tau(theta)`` on unit directions.

    The samples and their reflections through the origin define points
    ``u(theta) / tau(theta)`` on the unit sphere of the norm; the norm is the
    gauge of their convex hull.  A sample strictly inside the hull cannot come
    from a convex norm and is rejected.
    """
    angles = np.asarray(angles, float)
    values = np.asarray(values, float)
    if angles.shape != values.shape or len(angles) < 2:
        raise NormError("need matching arrays of at least two angles and values")
    if np.any(values <= 0):
        raise NormError("norm values must be positive")
    pts = np.stack([np.cos(angles), np.sin(angles)], axis=1) / values[:, None]
    allpts = np.vstack([pts, -pts])
    try:
        hull = ConvexHull(allpts)
    except Exception as exc:
        raise NormError(f"table does not span the plane: {exc}") from None
    # hull.equations rows are (n, c) with n . x + c <= 0 inside
    n, c = hull.equations[:, :2], -hull.equations[:, 2]
    if np.any(c <= 0):
        raise NormError("origin is not interior to the unit ball")
    facets = np.column_stack([n, c])
    norm = Norm2D("table", facets=facets)
    got = norm(allpts)
    if np.any(got < 1 - rtol):
        raise NormError("table is not convex: some sample lies strictly inside the hull of the others")
    return norm


def check_norm(norm: Norm2D, rng: np.random.Generator, n: int = 200, tol: float = 1e-9) -> bool:
    """Spot-check homogeneity, symmetry and the triangle inequality."""
    a, b = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
    t = rng.uniform(0.1, 5.0, size=n)
    na, nb, nab = norm(a), norm(b), norm(a + b)
    ok = np.all(nab <= na + nb + tol)
    ok &= np.allclose(norm(a * t[:, None]), t * na, rtol=1e-9)
    ok &= np.allclose(norm(-a), na, rtol=1e-12)
    return bool(ok and np.all(na > 0))


# ---------------------------------------------------------------------------
# topologies


@dataclass
class SteinerTopology:
    name: str
    terminals: np.ndarray
    steiner: np.ndarray
    edges: list
    length: float
    parameter: float = float("nan")

    @property
    def points(self) -> np.ndarray:
        return np.vstack([self.terminals, self.steiner])

    def degrees(self) -> list[int]:
        deg = [0] * len(self.points)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg[len(self.terminals):]

    def angles(self) -> list[list[float]]:
        """Euclidean angles in degrees between consecutive edges at each inner node."""
        pts = self.points
        out = []
        for k in range(len(self.terminals), len(pts)):
            nbrs = [j if i == k else i for i, j in self.edges if k in (i, j)]
            dirs = sorted(np.arctan2(*(pts[m] - pts[k])[::-1]) for m in nbrs)
            gaps = np.diff(dirs + [dirs[0] + 2 * np.pi])
            out.append(list(np.degrees(gaps)))
        return out

    def faces(self, side: float) -> dict[str, Polygon]:
        s1, s2 = self.steiner
        c00, c10, c11, c01 = self.terminals
        if self.name == "vertical":
            faces = {"bottom": [c00, c10, s1], "top": [c01, s2, c11], "left": [c00, s1, s2, c01],
                     "right": [c10, c11, s2, s1]}
        else:
            faces = {"left": [c00, s1, c01], "right": [c10, c11, s2], "bottom": [c00, c10, s2, s1],
                     "top": [c01, s1, s2, c11]}
        return {k: Polygon(v) for k, v in faces.items()}

    def colored_faces(self, side: float, colors: dict | None = None) -> dict[int, Polygon]:
        colors = colors or DEFAULT_COLORS
        return {colors[k]: p for k, p in self.faces(side).items()}


def _corners(side: float) -> np.ndarray:
    return np.array([[0, 0], [side, 0], [side, side], [0, side]], dtype=float)


def bar_tree(norm: Norm2D, side: float, name: str, a: float) -> SteinerTopology:
    t = _corners(side)
    h = side / 2
    if name == "vertical":
        st = np.array([[h, a], [h, side - a]])
        edges = [(0, 4), (1, 4), (3, 5), (2, 5), (4, 5)]
    elif name == "horizontal":
        st = np.array([[a, h], [side - a, h]])
        edges = [(0, 4), (3, 4), (1, 5), (2, 5), (4, 5)]
    else:
        raise ValueError(f"unknown topology {name!r}")
    pts = np.vstack([t, st])
    length = float(sum(norm(pts[j] - pts[i]) for i, j in edges))
    return SteinerTopology(name, t, st, edges, length, a)


def optimize_bar(norm: Norm2D, side: float, name: str, xatol: float = 1e-9) -> SteinerTopology:
    """Minimise the tree length over the bar half-gap ``a`` in ``[0, side/2]``."""
    res = minimize_scalar(lambda a: bar_tree(norm, side, name, a).length, bounds=(0.0, side / 2),
                          method="bounded", options={"xatol": xatol})
    best = bar_tree(norm, side, name, float(res.x))
    for edge_a in (0.0, side / 2):
        cand = bar_tree(norm, side, name, edge_a)
        if cand.length < best.length:
            best = cand
    return best


@dataclass
class SquareTrees:
    vertical: SteinerTopology
    horizontal: SteinerTopology
    three_sides: float

    @property
    def best(self) -> SteinerTopology:
        return self.vertical if self.vertical.length <= self.horizontal.length else self.horizontal


def three_sides_length(norm: Norm2D, side: float) -> float:
    ex, ey = norm([side, 0.0]), norm([0.0, side])
    return float(min(2 * ex + ey, ex + 2 * ey))


def steiner_tree_square(norm: Norm2D | None = None, side: float = 1.0) -> SquareTrees:
    norm = norm or euclidean()
    return SquareTrees(optimize_bar(norm, side, "vertical"), optimize_bar(norm, side, "horizontal"),
                       three_sides_length(norm, side))


# ---------------------------------------------------------------------------
# regions


def _check_partition(faces: dict, side: float, tol: float = 1e-9) -> None:
    polys = list(faces.values())
    total = sum(p.area for p in polys)
    if abs(total - side * side) > tol * max(1.0, side * side):
        raise DegenerateOverlap(f"faces cover area {total}, expected {side * side}")
    for i in range(len(polys)):
        if not polys[i].is_valid:
            raise DegenerateOverlap("a face polygon is self-intersecting")
        for j in range(i + 1, len(polys)):
            if polys[i].intersection(polys[j]).area > tol:
                raise DegenerateOverlap("two faces of one tree overlap")


def symmetric_difference_regions(top_a: SteinerTopology, top_b: SteinerTopology, colors: dict | None = None,
                                 side: float = 1.0) -> dict[int, tuple[Polygon, Polygon]]:
    """Per colour: points of that colour under ``top_a`` but not ``top_b``, and the reverse."""
    fa, fb = top_a.colored_faces(side, colors), top_b.colored_faces(side, colors)
    _check_partition(fa, side)
    _check_partition(fb, side)
    return {c: (fa[c].difference(fb[c]), fb[c].difference(fa[c])) for c in fa}


def face_overlap(top_a: SteinerTopology, top_b: SteinerTopology, ca: int, cb: int, colors: dict | None = None,
                 side: float = 1.0) -> Polygon:
    """Points coloured ``ca`` by ``top_a`` and ``cb`` by ``top_b``."""
    return top_a.colored_faces(side, colors)[ca].intersection(top_b.colored_faces(side, colors)[cb])


def lattice_coords(box: Box) -> np.ndarray:
    """Site centres mapped into the unit square (2D boxes only)."""
    if box.d != 2:
        raise ValueError("Steiner regions live on 2D boxes")
    lo = np.array([r[0] for r in box.ranges], float)
    n = np.array(box.shape, float)
    return (box.sites - lo + 0.5) / n


def region_sites(region, box: Box) -> list[tuple[int, int]]:
    pts = lattice_coords(box)
    inside = shapely.contains_xy(region, pts[:, 0], pts[:, 1]) if not region.is_empty else np.zeros(len(pts), bool)
    return [tuple(int(c) for c in s) for s in box.sites[inside]]


def deepest_site(region, box: Box) -> tuple[int, int] | None:
    """The lattice site of ``region`` farthest from the region's boundary."""
    sites = region_sites(region, box)
    if not sites:
        return None
    pts = lattice_coords(box)[[box.site_index(s) for s in sites]]
    d = shapely.distance(region.boundary, shapely.points(pts))
    return sites[int(np.argmax(d))]


def counterexample_sites(box: Box, norm: Norm2D | None = None, i: int = 1, j: int = 3, colors: dict | None = None):
    """``(x, y)`` with ``x`` coloured ``i`` and ``y`` coloured ``j`` by the same tree but not by the other.

    Conditioning on ``sigma_y = j`` then favours the tree that also gives
    ``sigma_x = i``.
    """
    trees = steiner_tree_square(norm)
    regions = symmetric_difference_regions(trees.vertical, trees.horizontal, colors)
    for pick in (0, 1):
        ra, rb = regions[i][pick], regions[j][pick]
        if ra.area > 0 and rb.area > 0:
            x, y = deepest_site(ra, box), deepest_site(rb, box)
            if x is not None and y is not None:
                return x, y
    return None


def region_centre(region) -> tuple[float, float]:
    p = polylabel(region, tolerance=1e-4) if region.geom_type == "Polygon" else region.representative_point()
    return float(p.x), float(p.y)
