"""Events and observables on batches of spin configurations.

An event is a vectorised predicate ``spins (N, n) -> bool (N,)``.  Events that
know their ``support`` (the sites they read) can be evaluated from a marginal
table instead of the full configuration space, which is what the exact
measures use for speed.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .lattice import PLUS, MINUS, Box


class Event:
    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], support: Sequence[int] | None = None, name: str = ""):
        self.fn = fn
        self.support = None if support is None else tuple(sorted(set(int(s) for s in support)))
        self.name = name or getattr(fn, "__name__", "event")

    def __call__(self, spins: np.ndarray) -> np.ndarray:
        spins = np.asarray(spins)
        out = np.asarray(self.fn(np.atleast_2d(spins)), dtype=bool)
        return out if spins.ndim == 2 else out[0]

    def _support_with(self, other: "Event"):
        if self.support is None or other.support is None:
            return None
        return self.support + other.support

    def __and__(self, other: "Event") -> "Event":
        return Event(lambda s: self(s) & other(s), self._support_with(other), f"({self.name} & {other.name})")

    def __or__(self, other: "Event") -> "Event":
        return Event(lambda s: self(s) | other(s), self._support_with(other), f"({self.name} | {other.name})")

    def __invert__(self) -> "Event":
        return Event(lambda s: ~self(s), self.support, f"~{self.name}")

    def __repr__(self):
        return f"Event({self.name})"


def always(name: str = "always") -> Event:
    return Event(lambda s: np.ones(len(s), bool), (), name)


def never(name: str = "never") -> Event:
    return Event(lambda s: np.zeros(len(s), bool), (), name)


def site_is(box: Box, site, color: int) -> Event:
    i = box.site_index(site)
    return Event(lambda s: s[:, i] == color, (i,), f"s{tuple(site)}={color}")


def all_equal(box: Box, sites, color: int) -> Event:
    """Every site of ``sites`` has colour ``color``; empty set gives the sure event."""
    idx = [box.site_index(x) for x in sites]
    if not idx:
        return always(f"empty={color}")
    return Event(lambda s: np.all(s[:, idx] == color, axis=1), idx, f"all{len(idx)}={color}")


def block_sites(box: Box, center, m: int) -> list[tuple[int, ...]]:
    """Sites of the cube of odd side ``m`` centred at ``center``."""
    if m % 2 != 1 or m < 1:
        raise ValueError(f"block side must be odd, got {m}")
    r = m // 2
    center = np.asarray(center)
    grids = np.meshgrid(*[np.arange(c - r, c + r + 1) for c in center], indexing="ij")
    pts = [tuple(int(v) for v in p) for p in np.stack([g.ravel() for g in grids], axis=1)]
    for p in pts:
        if not box.contains(p):
            raise ValueError(f"block around {tuple(center)} leaves the box at {p}")
    return pts


def majority_is(box: Box, center, m: int, sign: int = 1) -> Event:
    """``M = sign`` where ``M`` is the +1/-1 majority of the Ising spins in the block."""
    idx = [box.site_index(p) for p in block_sites(box, center, m)]
    half = len(idx) / 2

    def fn(s):
        plus = np.sum(s[:, idx] == PLUS, axis=1) > half
        return plus if sign > 0 else ~plus

    return Event(fn, idx, f"M{m}{tuple(center)}={'+' if sign > 0 else '-'}")


def ising_spin(box: Box, site):
    """Observable ``sigma_x`` in +-1 form."""
    i = box.site_index(site)
    return lambda s: np.where(s[:, i] == PLUS, 1.0, -1.0)


def plus_at(box: Box, site) -> Event:
    return site_is(box, site, PLUS)


def minus_at(box: Box, site) -> Event:
    return site_is(box, site, MINUS)
