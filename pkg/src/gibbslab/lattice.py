"""Boxes of Z^d, boundary conditions and the Potts Hamiltonian.

Spins are stored as ``uint8`` arrays indexed by the lexicographic site order
of a :class:`Box`; colours run over ``1..q``.  Boundary values live on the
edge-adjacent exterior sites only and take values in ``0..q`` where ``0``
means free (a free neighbour never agrees with anything).

Inverse temperatures are always the Potts ``beta`` multiplying the number of
agreeing bonds.  The Ising model with coupling ``beta_ising`` on ``+-1`` spins
is the ``q = 2`` case at ``beta = 2 * beta_ising`` with colour 1 read as -1
and colour 2 read as +1.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

SCHEMA_VERSION = 1

MINUS = 1
PLUS = 2


class DomainError(ValueError):
    """Spin or boundary array does not match the box it is used with."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``prod_k [lo_k, hi_k]`` of Z^d with its outer boundary."""

    ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.ranges) < 1:
            raise ValueError("a box needs at least one axis")
        for lo, hi in self.ranges:
            if hi < lo:
                raise ValueError(f"empty range [{lo}, {hi}]")

    @property
    def d(self) -> int:
        return len(self.ranges)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(hi - lo + 1 for lo, hi in self.ranges)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def sites(self) -> np.ndarray:
        """Interior coordinates, shape ``(n, d)``, lexicographic order."""
        axes = [np.arange(lo, hi + 1) for lo, hi in self.ranges]
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(c) for c in s): i for i, s in enumerate(self.sites)}

    def contains(self, site: Sequence[int]) -> bool:
        return len(site) == self.d and all(lo <= c <= hi for c, (lo, hi) in zip(site, self.ranges))

    def site_index(self, site: Sequence[int]) -> int:
        try:
            return self.index[tuple(int(c) for c in site)]
        except KeyError:
            raise KeyError(f"site {tuple(site)} is not inside {self}") from None

    @cached_property
    def _edges(self):
        n = self.n_sites
        shape = self.shape
        interior = []
        ext_pairs = []
        ext_sites = {}
        flat = np.arange(n).reshape(shape)
        for k in range(self.d):
            # interior bonds along axis k
            a = np.take(flat, np.arange(shape[k] - 1), axis=k).ravel()
            b = np.take(flat, np.arange(1, shape[k]), axis=k).ravel()
            interior.append(np.stack([a, b], axis=1))
        interior = np.concatenate(interior) if interior else np.zeros((0, 2), int)
        interior = interior[np.lexsort((interior[:, 1], interior[:, 0]))]
        for i, s in enumerate(self.sites):
            for k in range(self.d):
                for step in (-1, 1):
                    t = s.copy()
                    t[k] += step
                    if not self.contains(t):
                        key = tuple(int(c) for c in t)
                        ext_sites.setdefault(key, None)
                        ext_pairs.append((i, key))
        boundary = sorted(ext_sites)
        bindex = {b: j for j, b in enumerate(boundary)}
        pairs = np.array([(i, bindex[key]) for i, key in ext_pairs], dtype=np.int64).reshape(-1, 2)
        return interior.astype(np.int64), np.array(boundary, dtype=np.int64).reshape(-1, self.d), pairs

    @property
    def interior_bonds(self) -> np.ndarray:
        """Pairs ``(a, b)`` of neighbouring interior sites, each bond once."""
        return self._edges[0]

    @property
    def boundary(self) -> np.ndarray:
        """Exterior sites edge-adjacent to the box, lexicographic, ``(m, d)``."""
        return self._edges[1]

    @property
    def boundary_bonds(self) -> np.ndarray:
        """Pairs ``(interior index, boundary index)``."""
        return self._edges[2]

    @cached_property
    def boundary_index(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(c) for c in s): j for j, s in enumerate(self.boundary)}

    @cached_property
    def neighbors(self) -> np.ndarray:
        """Interior neighbour table ``(n, 2d)`` padded with -1."""
        nbr = np.full((self.n_sites, 2 * self.d), -1, dtype=np.int64)
        fill = np.zeros(self.n_sites, dtype=np.int64)
        for a, b in self.interior_bonds:
            nbr[a, fill[a]] = b
            fill[a] += 1
            nbr[b, fill[b]] = a
            fill[b] += 1
        return nbr

    def to_dict(self) -> dict:
        return {"ranges": [list(r) for r in self.ranges]}

    @classmethod
    def from_dict(cls, data: dict) -> "Box":
        return cls(tuple((int(lo), int(hi)) for lo, hi in data["ranges"]))

    def __repr__(self):
        return "Box(" + "x".join(f"[{lo},{hi}]" for lo, hi in self.ranges) + ")"


def make_box(d: int, ranges: Sequence[Sequence[int]]) -> Box:
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if len(ranges) != d:
        raise ValueError(f"expected {d} ranges, got {len(ranges)}")
    return Box(tuple((int(lo), int(hi)) for lo, hi in ranges))


def centered_box(*sides: int) -> Box:
    """Box with side lengths ``sides`` and axis ``k`` covering ``[-(s//2), s - s//2 - 1]``.

    For even sides this is symmetric under ``x -> -1 - x``, which is the
    reflection used for Dobrushin mixtures.
    """
    return make_box(len(sides), [(-(s // 2), s - s // 2 - 1) for s in sides])


@dataclass(frozen=True)
class ModelParams:
    q: int
    beta: float

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 2:
            raise ValueError(f"q must be an integer >= 2, got {self.q}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")

    @property
    def p(self) -> float:
        """Bond probability of the Edwards-Sokal coupling."""
        return float(-np.expm1(-self.beta))

    def with_beta(self, beta: float) -> "ModelParams":
        return ModelParams(self.q, beta)


def ising_params(beta_ising: float) -> ModelParams:
    """Potts parameters equivalent to the +-1 Ising model at ``beta_ising``."""
    return ModelParams(2, 2.0 * beta_ising)


@dataclass(frozen=True, eq=False)
class BoundaryCondition:
    """Values in ``0..q`` on ``box.boundary`` (0 = free)."""

    box: Box
    values: np.ndarray
    kind: str = "explicit"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.uint8)
        if values.shape != (len(self.box.boundary),):
            raise DomainError(
                f"boundary condition has {values.shape} values, box boundary has {len(self.box.boundary)} sites"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def colors(self) -> list[int]:
        return sorted(int(c) for c in set(self.values.tolist()) - {0})

    def max_color(self) -> int:
        return int(self.values.max(initial=0))

    def color_set(self, color: int) -> np.ndarray:
        """Boundary sites of the given colour (``E_i`` in the coupling)."""
        return self.box.boundary[self.values == color]

    def value_at(self, site: Sequence[int]) -> int:
        return int(self.values[self.box.boundary_index[tuple(int(c) for c in site)]])

    def relabel(self, perm: dict[int, int]) -> "BoundaryCondition":
        """Apply a colour permutation; 0 always maps to 0."""
        table = np.arange(256, dtype=np.uint8)
        for a, b in perm.items():
            table[a] = b
        return BoundaryCondition(self.box, table[self.values], "explicit")

    def field(self, q: int) -> np.ndarray:
        """Counts ``(n, q + 1)`` of boundary neighbours of each colour."""
        if self.max_color() > q:
            raise DomainError(f"boundary uses colour {self.max_color()} but q = {q}")
        out = np.zeros((self.box.n_sites, q + 1), dtype=np.int64)
        bb = self.box.boundary_bonds
        np.add.at(out, (bb[:, 0], self.values[bb[:, 1]].astype(np.int64)), 1)
        out[:, 0] = 0
        return out

    def __eq__(self, other):
        return (
            isinstance(other, BoundaryCondition)
            and self.box == other.box
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.box, self.values.tobytes()))

    def to_dict(self) -> dict:
        data = {"schema_version": SCHEMA_VERSION, "box": self.box.to_dict(), "kind": self.kind}
        if self.kind == "explicit":
            data["sites"] = [
                [list(map(int, s)), int(v)] for s, v in zip(self.box.boundary, self.values)
            ]
        else:
            data["params"] = self.params
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# constructors


def free_bc(box: Box) -> BoundaryCondition:
    return BoundaryCondition(box, np.zeros(len(box.boundary)), "free")


def pure_bc(box: Box, color: int) -> BoundaryCondition:
    return BoundaryCondition(box, np.full(len(box.boundary), color), "pure", {"color": int(color)})


def dobrushin_bc(box: Box, axis: int = -1, height: int = 0, colors: tuple[int, int] = (PLUS, MINUS)):
    """``colors[0]`` on boundary sites with coordinate ``>= height`` along ``axis``, else ``colors[1]``.

    With the default Ising colours this is the +/- condition; passing the
    colours reversed gives its flip.
    """
    if not -box.d <= axis < box.d:
        raise ValueError(f"axis {axis} out of range for a {box.d}-dimensional box")
    axis %= box.d
    i, j = colors
    above = box.boundary[:, axis] >= height
    values = np.where(above, i, j)
    return BoundaryCondition(
        box, values, "dobrushin", {"axis": axis, "height": int(height), "colors": [int(i), int(j)]}
    )


def one_step_bc(box: Box, colors: tuple[int, int] = (PLUS, MINUS)) -> BoundaryCondition:
    """``colors[0]`` where ``z >= 0`` or (``z >= -1`` and ``x >= 0``), else ``colors[1]``."""
    if box.d != 3:
        raise ValueError("the one-step boundary condition is defined for d = 3")
    x, z = box.boundary[:, 0], box.boundary[:, 2]
    up = (z >= 0) | ((z >= -1) & (x >= 0))
    return BoundaryCondition(
        box, np.where(up, colors[0], colors[1]), "one-step", {"colors": [int(c) for c in colors]}
    )


def shifted_dobrushin_bc(box: Box, shift: int, colors: tuple[int, int] = (PLUS, MINUS)):
    """Dobrushin condition raised by ``shift`` layers along the last axis (exploration only)."""
    bc = dobrushin_bc(box, -1, shift, colors)
    return BoundaryCondition(box, bc.values, "shifted-dobrushin", {"shift": int(shift), "colors": list(colors)})


_SIDES = ("right", "top", "left", "bottom")


def boundary_sector(box: Box) -> np.ndarray:
    """Sector index 0..3 (right, top, left, bottom) of every boundary site of a 2D box."""
    if box.d != 2:
        raise ValueError("sectors are defined for d = 2")
    center = np.array([(lo + hi) / 2 for lo, hi in box.ranges])
    rel = box.boundary - center
    # rescale so that sectors follow the box diagonals also for rectangles
    half = np.array([(hi - lo + 1) / 2 for lo, hi in box.ranges])
    ang = np.arctan2(rel[:, 1] / half[1], rel[:, 0] / half[0])
    return (np.floor((ang + np.pi / 4) / (np.pi / 2)).astype(int)) % 4


def quadrant_bc(box: Box, colors: Sequence[int] = (1, 2, 3, 4)) -> BoundaryCondition:
    """Colour the four sides of a 2D box (right, top, left, bottom) in cyclic order.

    The colour changes sit at the corners, so the interface endpoints are the
    corners of the square.  Repeated colours give pure or bicolour variants.
    """
    if box.d != 2:
        raise ValueError("quadrant boundary conditions need d = 2")
    if len(colors) != 4:
        raise ValueError("need exactly four colours")
    sector = boundary_sector(box)
    values = np.asarray(colors)[sector]
    return BoundaryCondition(box, values, "quadrant", {"colors": [int(c) for c in colors]})


def explicit_bc(box: Box, assignment: dict) -> BoundaryCondition:
    values = np.zeros(len(box.boundary), dtype=np.uint8)
    for site, v in assignment.items():
        values[box.boundary_index[tuple(site)]] = v
    return BoundaryCondition(box, values, "explicit")


def random_bc(box: Box, q: int, rng: np.random.Generator, colors: Sequence[int] | None = None):
    """Boundary values drawn uniformly from ``colors`` (default ``0..q``)."""
    pool = np.arange(q + 1) if colors is None else np.asarray(colors)
    return BoundaryCondition(box, rng.choice(pool, size=len(box.boundary)), "explicit")


_BC_BUILDERS = {
    "free": lambda box, p: free_bc(box),
    "pure": lambda box, p: pure_bc(box, p["color"]),
    "dobrushin": lambda box, p: dobrushin_bc(box, p.get("axis", -1), p.get("height", 0), tuple(p.get("colors", (PLUS, MINUS)))),
    "one-step": lambda box, p: one_step_bc(box, tuple(p.get("colors", (PLUS, MINUS)))),
    "shifted-dobrushin": lambda box, p: shifted_dobrushin_bc(box, p["shift"], tuple(p.get("colors", (PLUS, MINUS)))),
    "quadrant": lambda box, p: quadrant_bc(box, p.get("colors", (1, 2, 3, 4))),
}


def bc_from_dict(data: dict, box: Box | None = None) -> BoundaryCondition:
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported boundary schema version {version}")
    if box is None:
        box = Box.from_dict(data["box"])
    kind = data["kind"]
    if kind == "explicit":
        return explicit_bc(box, {tuple(s): v for s, v in data["sites"]})
    if kind not in _BC_BUILDERS:
        raise ValueError(f"unknown boundary condition kind {kind!r}")
    return _BC_BUILDERS[kind](box, data.get("params", {}))


def bc_from_json(text: str) -> BoundaryCondition:
    return bc_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# energies


def _check_spins(box: Box, spins: np.ndarray, q: int | None = None) -> np.ndarray:
    spins = np.asarray(spins)
    if spins.shape[-1] != box.n_sites:
        raise DomainError(f"spin array has {spins.shape[-1]} sites, box has {box.n_sites}")
    if q is not None and spins.size and (spins.min() < 1 or spins.max() > q):
        raise DomainError(f"spins must lie in 1..{q}")
    return spins


def agreements(box: Box, bc: BoundaryCondition, spins: np.ndarray, q: int | None = None) -> np.ndarray:
    """Number of agreeing bonds touching the box; works on ``(..., n)`` arrays."""
    if bc.box != box:
        raise DomainError("boundary condition belongs to a different box")
    spins = _check_spins(box, spins)
    q = int(max(spins.max(initial=1), bc.max_color())) if q is None else q
    a, b = box.interior_bonds[:, 0], box.interior_bonds[:, 1]
    total = np.sum(spins[..., a] == spins[..., b], axis=-1)
    fld = bc.field(q)
    total = total + np.take_along_axis(fld, spins.reshape(-1, box.n_sites).T.astype(np.int64), axis=1).sum(axis=0).reshape(spins.shape[:-1])
    return total


def hamiltonian(box: Box, bc: BoundaryCondition, sigma: np.ndarray) -> np.ndarray | float:
    """``H = -(number of agreeing nearest-neighbour pairs meeting the box)``."""
    h = -agreements(box, bc, sigma)
    return float(h) if np.ndim(h) == 0 else h


def gibbs_log_weight(box: Box, bc: BoundaryCondition, params: ModelParams, sigma: np.ndarray):
    """Unnormalised log-weight ``-beta * H``."""
    _check_spins(box, sigma, params.q)
    w = params.beta * agreements(box, bc, sigma, params.q)
    return float(w) if np.ndim(w) == 0 else w


# ---------------------------------------------------------------------------
# Ising view


def to_ising(spins: np.ndarray) -> np.ndarray:
    """Colour 1 -> -1, colour 2 -> +1 (0 stays 0 for free boundary sites)."""
    spins = np.asarray(spins)
    return np.where(spins == 0, 0, 2 * spins.astype(np.int8) - 3).astype(np.int8)


def from_ising(spins: np.ndarray) -> np.ndarray:
    spins = np.asarray(spins)
    return np.where(spins == 0, 0, (spins + 3) // 2).astype(np.uint8)


def ising_log_weight(box: Box, bc: BoundaryCondition, beta_ising: float, sigma_pm: np.ndarray):
    """``beta_ising * sum sigma_i sigma_j`` over bonds meeting the box, free sites counting as 0."""
    sigma_pm = _check_spins(box, sigma_pm)
    omega = to_ising(bc.values).astype(np.int64)
    a, b = box.interior_bonds[:, 0], box.interior_bonds[:, 1]
    s = sigma_pm.astype(np.int64)
    total = np.sum(s[..., a] * s[..., b], axis=-1)
    bb = box.boundary_bonds
    total = total + np.sum(s[..., bb[:, 0]] * omega[bb[:, 1]], axis=-1)
    return beta_ising * total


def all_configs(n: int, q: int) -> np.ndarray:
    """Every spin assignment of ``n`` sites, shape ``(q**n, n)``, site 0 fastest."""
    return np.array(list(itertools.product(range(1, q + 1), repeat=n)), dtype=np.uint8)[:, ::-1].copy().reshape(-1, n)
