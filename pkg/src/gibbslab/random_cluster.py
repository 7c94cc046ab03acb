"""Random-cluster measures on small graphs and the Edwards-Sokal coupling.

A colored boundary is wired by contracting every colour class ``E_i`` into a
single vertex.  Parallel edges created by the contraction are merged into one
edge with probability ``1 - (1 - p)**k``, which leaves the random-cluster
weights of all connectivity events unchanged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .clusters import edge_state_labels, labels_from_open
from .exact import DEFAULT_CAP, CapExceeded, NullEventError, TableMeasure, decode, enumerate_measure
from .lattice import Box, BoundaryCondition, DomainError, ModelParams


@dataclass(frozen=True, eq=False)
class Graph:
    n_vertices: int
    edges: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        p = np.broadcast_to(np.asarray(self.p, dtype=float), (len(edges),)).copy()
        if len(edges) and (edges.min() < 0 or edges.max() >= self.n_vertices):
            raise ValueError("edge references a missing vertex")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self-loops are not allowed")
        key = {tuple(sorted(e)) for e in edges.tolist()}
        if len(key) != len(edges):
            raise ValueError("graph must be simple (no parallel edges)")
        if np.any((p < 0) | (p > 1)):
            raise ValueError("edge probabilities must lie in [0, 1]")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "p", p)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def with_p(self, p) -> "Graph":
        return Graph(self.n_vertices, self.edges, p)


def read_edge_list(path) -> Graph:
    """Edge list: ``# vertices N`` header, then ``u v [p]`` per line."""
    n = None
    edges, probs = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "vertices":
                    n = int(parts[1])
                continue
            parts = line.split()
            edges.append((int(parts[0]), int(parts[1])))
            probs.append(float(parts[2]) if len(parts) > 2 else np.nan)
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    return Graph(n, np.array(edges, dtype=np.int64).reshape(-1, 2), np.nan_to_num(np.array(probs), nan=0.5))


def write_edge_list(graph: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# vertices {graph.n_vertices}\n")
        for (u, v), p in zip(graph.edges, graph.p):
            fh.write(f"{u} {v} {float(p)!r}\n")


@dataclass(frozen=True)
class WiredBoundary:
    """Vertex sets per colour; ``cond`` is the event that different colours stay disconnected."""

    sets: dict

    def __post_init__(self):
        seen = set()
        for color, verts in self.sets.items():
            vs = set(int(v) for v in verts)
            if vs & seen:
                raise ValueError("wired colour classes must be disjoint")
            seen |= vs

    @property
    def colors(self) -> list[int]:
        return sorted(self.sets)

    def vertices(self, color: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.sets.get(color, ()))


class ClusterView:
    """Batch of edge configurations with their cluster labels."""

    def __init__(self, graph: Graph, open_mask: np.ndarray, labels: np.ndarray):
        self.graph = graph
        self.open = open_mask
        self.labels = labels

    def __len__(self):
        return len(self.labels)

    def connected(self, v: int, verts: Sequence[int]) -> np.ndarray:
        """``v <-> verts`` for every configuration (a vertex is connected to itself)."""
        out = np.zeros(len(self), dtype=bool)
        for u in verts:
            out |= self.labels[:, v] == self.labels[:, u]
        return out

    def cluster_edges(self, verts: Sequence[int]) -> np.ndarray:
        """``C_S``: open edges lying on open paths from ``verts``."""
        if len(verts) == 0:
            return np.zeros_like(self.open)
        a = self.graph.edges[:, 0]
        hit = np.zeros(self.open.shape, dtype=bool)
        for u in verts:
            hit |= self.labels[:, a] == self.labels[:, [u]]
        return self.open & hit

    def n_clusters(self) -> np.ndarray:
        return np.sum(self.labels == np.arange(self.graph.n_vertices), axis=1)

    def disconnected(self, wiring: WiredBoundary) -> np.ndarray:
        ok = np.ones(len(self), dtype=bool)
        for ci, cj in itertools.combinations(wiring.colors, 2):
            for u in wiring.vertices(ci):
                ok &= ~self.connected(u, wiring.vertices(cj))
        return ok


class RCMeasure:
    """Exact random-cluster measure ``p^o (1-p)^c q^{#clusters}`` with per-edge ``p``."""

    def __init__(self, graph: Graph, q: float, cap: int = DEFAULT_CAP):
        if q <= 0:
            raise ValueError("q must be positive")
        m = graph.n_edges
        if 2**m > cap:
            raise CapExceeded(f"2^|E| = 2^{m} edge states exceed the cap {cap}")
        self.graph, self.q = graph, float(q)
        idx = np.arange(2**m, dtype=np.int64)
        self.open = ((idx[:, None] >> np.arange(m)) & 1).astype(bool) if m else np.zeros((1, 0), bool)
        self.labels = edge_state_labels(graph.n_vertices, graph.edges, 0, 2**m)
        view = ClusterView(graph, self.open, self.labels)
        with np.errstate(divide="ignore"):
            lp, lq = np.log(graph.p), np.log1p(-graph.p)
        logw = np.where(self.open, lp, lq).sum(axis=1) + view.n_clusters() * np.log(self.q)
        self.logw = logw
        finite = np.isfinite(logw)
        top = logw[finite].max()
        self.weights = np.where(finite, np.exp(logw - top), 0.0)
        self.weights /= self.weights.sum()
        self.view = view

    def expect(self, fn: Callable[[ClusterView], np.ndarray], given: np.ndarray | None = None) -> float:
        w = self.weights if given is None else np.where(given, self.weights, 0.0)
        total = w.sum()
        if total <= 0:
            raise NullEventError("conditioning event has probability zero")
        return float(np.dot(w, fn(self.view)) / total)

    def prob(self, mask: np.ndarray, given: np.ndarray | None = None) -> float:
        return self.expect(lambda v: mask.astype(float), given)


def rc_measure(graph: Graph, q: float, p=None, cap: int = DEFAULT_CAP) -> RCMeasure:
    """Random-cluster measure on ``graph``; a given ``p`` overrides the per-edge values."""
    if p is not None:
        graph = graph.with_p(p)
    return RCMeasure(graph, q, cap)


def rc_conditional(graph: Graph, q: float, p, wiring: WiredBoundary, f, g, cap: int = DEFAULT_CAP):
    """``(E[fg|cond], E[f|cond], E[g|cond])`` where cond keeps different colours apart."""
    mu = rc_measure(graph, q, p, cap)
    cond = mu.view.disconnected(wiring)
    fg = mu.expect(lambda v: f(v) * g(v), cond)
    return fg, mu.expect(f, cond), mu.expect(g, cond)


# ---------------------------------------------------------------------------
# Edwards-Sokal


def wired_graph(box: Box, bc: BoundaryCondition, params: ModelParams) -> tuple[Graph, WiredBoundary]:
    """Interior sites ``0..n-1`` followed by one contracted vertex per boundary colour."""
    n = box.n_sites
    colors = bc.colors
    if colors and max(colors) > params.q:
        raise DomainError(f"boundary colour {max(colors)} exceeds q = {params.q}")
    wire = {c: n + k for k, c in enumerate(colors)}
    fld = bc.field(params.q)
    edges = [tuple(e) for e in box.interior_bonds]
    probs = [params.p] * len(edges)
    for x in range(n):
        for c in colors:
            k = fld[x, c]
            if k:
                edges.append((x, wire[c]))
                probs.append(float(-np.expm1(-k * params.beta)))
    graph = Graph(n + len(colors), np.array(edges, dtype=np.int64).reshape(-1, 2), np.array(probs))
    return graph, WiredBoundary({c: (v,) for c, v in wire.items()})


def _wired_color(view: ClusterView, wiring: WiredBoundary, v: int) -> np.ndarray:
    """Colour forced on vertex ``v`` by the wiring, 0 when its cluster is free."""
    out = np.zeros(len(view), dtype=np.int64)
    for c in wiring.colors:
        out[view.connected(v, wiring.vertices(c))] = c
    return out


def _count_distinct(labels: np.ndarray) -> np.ndarray:
    """Distinct non-negative entries per row."""
    if labels.shape[1] == 0:
        return np.zeros(len(labels), dtype=np.int64)
    s = np.sort(labels, axis=1)
    new = np.ones_like(s, dtype=bool)
    new[:, 1:] = s[:, 1:] != s[:, :-1]
    return np.sum(new & (s >= 0), axis=1)


def cluster_functional_fA(view: ClusterView, A: Sequence[int], color: int, wiring: WiredBoundary, q: int) -> np.ndarray:
    """Conditional probability that every site of ``A`` gets ``color`` given the clusters.

    Equals ``q**-k`` with ``k`` the number of free clusters meeting ``A``, and
    0 as soon as a site of ``A`` is wired to another colour.
    """
    A = list(A)
    ok = np.ones(len(view), dtype=bool)
    free_labels = np.full((len(view), len(A)), -1, dtype=np.int64)
    for col, a in enumerate(A):
        forced = _wired_color(view, wiring, a)
        ok &= (forced == 0) | (forced == color)
        free_labels[:, col] = np.where(forced == 0, view.labels[:, a], -1)
    return np.where(ok, float(q) ** (-_count_distinct(free_labels)), 0.0)


def cluster_functional_literal(view: ClusterView, A: Sequence[int], color: int, wiring: WiredBoundary, q: int) -> np.ndarray:
    """The subset-sum form ``sum_X q^-kappa(A minus X) 1{X <-> E_i} 1{A minus X not <-> E_i}``.

    ``kappa`` counts the distinct clusters meeting a vertex set.  This form has
    no factor excluding sites wired to the other colours, so it differs from
    :func:`cluster_functional_fA` exactly on configurations where some site
    of ``A`` is connected to ``E_j``, ``j != color``.
    """
    A = list(A)
    Ei = wiring.vertices(color)
    conn = np.stack([view.connected(a, Ei) for a in A], axis=1) if A else np.zeros((len(view), 0), bool)
    total = np.zeros(len(view))
    for r in range(len(A) + 1):
        for X in itertools.combinations(range(len(A)), r):
            rest = [k for k in range(len(A)) if k not in X]
            ind = np.all(conn[:, list(X)], axis=1) & ~np.any(conn[:, rest], axis=1)
            kappa = _count_distinct(view.labels[:, [A[k] for k in rest]].astype(np.int64))
            total += ind * float(q) ** (-kappa)
    return total


def joint_functional(view: ClusterView, A, i: int, B, j: int, wiring: WiredBoundary, q: int) -> np.ndarray:
    """Conditional probability of ``{A = i, B = j}`` given the clusters.

    A free cluster meeting both ``A`` and ``B`` forbids the event when
    ``i != j``; otherwise this is ``f_A * f_B``.
    """
    A, B = list(A), list(B)
    fa = cluster_functional_fA(view, A, i, wiring, q)
    fb = cluster_functional_fA(view, B, j, wiring, q)
    if i == j:
        sites = A + B
        return cluster_functional_fA(view, sites, i, wiring, q)
    shared = np.zeros(len(view), dtype=bool)
    for a in A:
        fa_free = _wired_color(view, wiring, a) == 0
        for b in B:
            shared |= fa_free & (view.labels[:, a] == view.labels[:, b])
    return np.where(shared, 0.0, fa * fb)


class ESCoupling:
    """Conditioned random-cluster measure on the wired graph of ``(box, bc)``."""

    def __init__(self, box: Box, bc: BoundaryCondition, params: ModelParams, cap: int = DEFAULT_CAP):
        self.box, self.bc, self.params = box, bc, params
        self.graph, self.wiring = wired_graph(box, bc, params)
        self.rc = RCMeasure(self.graph, params.q, cap)
        self.cond = self.rc.view.disconnected(self.wiring)

    def expect(self, fn) -> float:
        return self.rc.expect(fn, self.cond)


def es_spin_marginal(box: Box, bc: BoundaryCondition, params: ModelParams, cap: int = DEFAULT_CAP) -> TableMeasure:
    """Spin law obtained by colouring clusters of the conditioned random-cluster measure."""
    if not float(params.q).is_integer():
        raise ValueError("the Edwards-Sokal coupling needs an integer q")
    es = ESCoupling(box, bc, params, cap)
    n, q = box.n_sites, params.q
    if q**n > cap:
        raise CapExceeded(f"q^|Lambda| = {q**n} exceeds the cap {cap}")
    w = np.where(es.cond, es.rc.weights, 0.0)
    w = w / w.sum()
    live = w > 0
    labels = es.rc.labels[live]
    uniq, inv = np.unique(labels, axis=0, return_inverse=True)
    mass = np.bincount(inv.ravel(), weights=w[live])
    wire_vertex = {c: es.wiring.vertices(c)[0] for c in es.wiring.colors}
    out = np.zeros(q**n)
    powers = q ** np.arange(n, dtype=np.int64)
    for row, weight in zip(uniq, mass):
        forced = np.zeros(n, dtype=np.int64)
        for c, v in wire_vertex.items():
            forced[row[:n] == row[v]] = c
        free = sorted(set(row[:n][forced == 0].tolist()))
        for colors in itertools.product(range(1, q + 1), repeat=len(free)):
            spins = forced.copy()
            for lab, c in zip(free, colors):
                spins[(row[:n] == lab) & (forced == 0)] = c
            out[int(np.dot(spins - 1, powers))] += weight * float(q) ** (-len(free))
    return TableMeasure(box, bc, params, out)


@dataclass
class ESIdentity:
    lhs: float
    rhs: float
    product_form: float
    fa_mean: float
    fb_mean: float


def verify_es_identity(box: Box, bc: BoundaryCondition, params: ModelParams, A, B, i: int, j: int, cap: int = DEFAULT_CAP) -> ESIdentity:
    """Potts probability of ``{A = i, B = j}`` against its random-cluster expression.

    ``rhs`` uses the exact conditional functional of the joint event;
    ``product_form`` is ``E[f_A f_B | cond]``, which agrees with ``rhs`` except
    on configurations where one free cluster meets both sets.
    """
    if i == j:
        raise ValueError("the identity is stated for two different colours")
    Ai = [box.site_index(a) for a in A]
    Bi = [box.site_index(b) for b in B]
    mu = enumerate_measure(box, bc, params, cap)
    sites = Ai + Bi
    table = mu.marginal(sites)
    q = params.q
    code = sum((i - 1) * q**k for k in range(len(Ai))) + sum((j - 1) * q ** (len(Ai) + k) for k in range(len(Bi)))
    if len(set(sites)) < len(sites):
        lhs = 0.0 if set(Ai) & set(Bi) else float(table[code])
    else:
        lhs = float(table[code])
    es = ESCoupling(box, bc, params, cap)
    wiring = es.wiring
    rhs = es.expect(lambda v: joint_functional(v, Ai, i, Bi, j, wiring, q))
    prod = es.expect(lambda v: cluster_functional_fA(v, Ai, i, wiring, q) * cluster_functional_fA(v, Bi, j, wiring, q))
    fa = es.expect(lambda v: cluster_functional_fA(v, Ai, i, wiring, q))
    fb = es.expect(lambda v: cluster_functional_fA(v, Bi, j, wiring, q))
    return ESIdentity(lhs, rhs, prod, fa, fb)


def view_from_edges(graph: Graph, open_mask: np.ndarray) -> ClusterView:
    open_mask = np.atleast_2d(np.asarray(open_mask, dtype=bool))
    return ClusterView(graph, open_mask, labels_from_open(graph.n_vertices, graph.edges, open_mask))
