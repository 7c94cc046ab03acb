"""Correlation inequalities as checkable reports, plus a counter-example search.

Conventions: ``slack = rhs - lhs`` where the inequality reads ``lhs <= rhs``,
so a non-negative slack means the inequality holds.  Exact checks call a
violation only below ``-tolerance``; Monte Carlo checks need the slack to be
more than four standard errors below zero.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import exact as ex
from .events import Event, all_equal, plus_at, minus_at
from .lattice import MINUS, PLUS, Box, BoundaryCondition, ModelParams
from .random_cluster import ClusterView, Graph, WiredBoundary, rc_measure

EXACT_TOL = 1e-12
MC_SIGMAS = 4.0
MAX_VERIFY_SITES = 16


class MonotonicityError(ValueError):
    """An event or functional is not monotone in the declared direction."""


class BicolorError(ValueError):
    """The boundary condition uses more than two colours."""


# ---------------------------------------------------------------------------
# monotone events


@dataclass
class MonotoneEvent:
    event: Event
    direction: str = "increasing"
    description: str = ""

    def __post_init__(self):
        if self.direction not in ("increasing", "decreasing"):
            raise ValueError(f"direction must be increasing or decreasing, got {self.direction!r}")
        self.description = self.description or self.event.name

    def __call__(self, spins):
        return self.event(spins)

    def verify(self, n_sites: int | None = None) -> bool:
        """Exhaustive single-flip check over the support (or the whole box).

        Raises :class:`MonotonicityError` on failure.  Supports larger than
        16 sites are not checked and the declared direction is trusted.
        """
        sites = self.event.support
        if sites is None:
            if n_sites is None or n_sites > MAX_VERIFY_SITES:
                return False
            sites = tuple(range(n_sites))
        if len(sites) > MAX_VERIFY_SITES:
            return False
        k = len(sites)
        width = (max(sites) + 1) if sites else 1
        if n_sites is not None:
            width = max(width, n_sites)
        idx = np.arange(2**k, dtype=np.int64)
        bits = (idx[:, None] >> np.arange(k)) & 1
        full = np.full((2**k, width), MINUS, dtype=np.uint8)
        full[:, list(sites)] = np.where(bits == 1, PLUS, MINUS)
        val = self.event(full)
        sign = 1 if self.direction == "increasing" else -1
        for j in range(k):
            lo = bits[:, j] == 0
            up = idx[lo] | (1 << j)
            if np.any(sign * (val[up].astype(int) - val[lo].astype(int)) < 0):
                raise MonotonicityError(f"{self.description} is not {self.direction} in site {sites[j]}")
        return True


def increasing(event: Event) -> MonotoneEvent:
    return MonotoneEvent(event, "increasing")


def decreasing(event: Event) -> MonotoneEvent:
    return MonotoneEvent(event, "decreasing")


# ---------------------------------------------------------------------------
# reports


@dataclass
class InequalityReport:
    inequality: str
    instance: dict
    lhs: float
    rhs: float
    method: str = "exact"
    stderr: float = 0.0
    tolerance: float = EXACT_TOL
    extra: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def verdict(self) -> str:
        if self.method == "exact":
            return "violated" if self.slack < -self.tolerance else "holds"
        if self.slack < -MC_SIGMAS * self.stderr:
            return "violated"
        return "holds" if self.slack >= 0 else "inconclusive"

    @property
    def violated(self) -> bool:
        return self.verdict == "violated"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slack"] = self.slack
        d["verdict"] = self.verdict
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def write_jsonl(reports: Iterable[InequalityReport], path) -> None:
    with open(path, "w") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")


def format_table(reports: Sequence[InequalityReport]) -> str:
    head = f"{'inequality':<14} {'lhs':>12} {'rhs':>12} {'slack':>12} {'method':>7}  verdict"
    lines = [head, "-" * len(head)]
    for r in reports:
        lines.append(f"{r.inequality:<14} {r.lhs:>12.6g} {r.rhs:>12.6g} {r.slack:>12.3g} {r.method:>7}  {r.verdict}")
    return "\n".join(lines)


def exact_tolerance(n_states: int) -> float:
    """Absolute slack tolerance for an exact check over ``n_states`` states."""
    return EXACT_TOL * max(1.0, float(n_states)) ** 0.5


def _describe(measure) -> dict:
    if isinstance(measure, ex.MixtureMeasure):
        return {"mixture": [dict(weight=w, **_describe(m)) for w, m in measure.components]}
    d = {"box": measure.box.to_dict(), "q": measure.params.q, "beta": measure.params.beta}
    if getattr(measure, "bc", None) is not None:
        d["bc"] = measure.bc.to_dict()
    return d


def _n_states(measure) -> int:
    if isinstance(measure, ex.MixtureMeasure):
        return max(_n_states(m) for _, m in measure.components)
    return measure.params.q ** measure.box.n_sites


# ---------------------------------------------------------------------------
# FKG


class EmpiricalMeasure:
    """Weighted independent ensembles of sampled configurations.

    Errors use batch means inside each ensemble, which is enough for the
    linearised covariance statistic used by :func:`check_fkg`.
    """

    def __init__(self, box: Box, params: ModelParams, ensembles: Sequence[tuple[float, np.ndarray]], n_batches=None):
        w = np.array([e[0] for e in ensembles], float)
        if not np.isclose(w.sum(), 1.0):
            raise ValueError("ensemble weights must sum to one")
        self.box, self.params = box, params
        self.ensembles = [(float(a), np.asarray(s)) for a, s in ensembles]
        self.n_batches = n_batches

    def _batches(self, vals):
        n = len(vals)
        a = self.n_batches or max(2, int(np.sqrt(n)))
        b = n // a
        return vals[: a * b].reshape(a, b).mean(axis=1)

    def fkg_statistic(self, f: Event, g: Event) -> tuple[float, float, float, float]:
        """``(E[fg], E[f], E[g], stderr of E[fg] - E[f]E[g])``."""
        parts = []
        for w, s in self.ensembles:
            fv, gv = f(s).astype(float), g(s).astype(float)
            parts.append((w, self._batches(fv), self._batches(gv), self._batches(fv * gv)))
        F = sum(w * fb.mean() for w, fb, _, _ in parts)
        G = sum(w * gb.mean() for w, _, gb, _ in parts)
        FG = sum(w * hb.mean() for w, _, _, hb in parts)
        var = 0.0
        for w, fb, gb, hb in parts:
            lin = hb - G * fb - F * gb
            var += w**2 * np.var(lin, ddof=1) / len(lin)
        return FG, F, G, float(np.sqrt(var))


def check_fkg(measure, f: MonotoneEvent, g: MonotoneEvent, verify: bool = True) -> InequalityReport:
    """FKG for a monotone pair: same direction needs ``E[f]E[g] <= E[fg]``.

    For an (increasing, decreasing) pair the inequality is reversed,
    ``E[fg] <= E[f]E[g]``.
    """
    if measure.params.q != 2:
        raise ValueError("FKG checks need an Ising (q = 2) measure")
    if verify:
        n = measure.box.n_sites
        f.verify(n if n <= MAX_VERIFY_SITES else None)
        g.verify(n if n <= MAX_VERIFY_SITES else None)
    same = f.direction == g.direction
    kind = "fkg" if same else "fkg-mixed"
    if isinstance(measure, EmpiricalMeasure):
        fg, pf, pg, se = measure.fkg_statistic(f.event, g.event)
        lhs, rhs = (pf * pg, fg) if same else (fg, pf * pg)
        return InequalityReport(kind, {"f": f.description, "g": g.description, "box": measure.box.to_dict(),
                                       "beta": measure.params.beta}, lhs, rhs, "mc", se, 0.0)
    pf, pg = ex.prob(measure, f.event), ex.prob(measure, g.event)
    fg = ex.prob(measure, f.event & g.event)
    lhs, rhs = (pf * pg, fg) if same else (fg, pf * pg)
    inst = {"f": f.description, "g": g.description, **_describe(measure)}
    return InequalityReport(kind, inst, lhs, rhs, tolerance=exact_tolerance(_n_states(measure)))


def small_monotone_events(box: Box) -> list[MonotoneEvent]:
    """All increasing single-site events and two-site AND/OR events."""
    n = box.n_sites
    out = []
    for i in range(n):
        out.append(MonotoneEvent(Event(lambda s, i=i: s[:, i] == PLUS, (i,), f"+{i}")))
    for i, j in itertools.combinations(range(n), 2):
        out.append(MonotoneEvent(Event(lambda s, i=i, j=j: (s[:, i] == PLUS) & (s[:, j] == PLUS), (i, j), f"+{i}&+{j}")))
        out.append(MonotoneEvent(Event(lambda s, i=i, j=j: (s[:, i] == PLUS) | (s[:, j] == PLUS), (i, j), f"+{i}|+{j}")))
    return out


@dataclass
class ExhaustiveFKG:
    n_events: int
    n_pairs: int
    min_slack: float
    worst: tuple[str, str]


def exhaustive_fkg(measure: ex.ExactMeasure, events: Sequence[MonotoneEvent] | None = None) -> ExhaustiveFKG:
    """FKG slack over every pair of the given increasing events.

    Uses one matrix product of indicator columns against the state weights.
    The (increasing, decreasing) pairs follow from complements and have the
    same slack.
    """
    box = measure.box
    if box.n_sites > MAX_VERIFY_SITES:
        raise ValueError("exhaustive FKG is limited to boxes with at most 16 sites")
    events = events if events is not None else small_monotone_events(box)
    for e in events:
        if e.direction != "increasing":
            raise ValueError("pass increasing events; complements are implied")
        e.verify(box.n_sites)
    probs = measure.probs()
    spins = measure.spins(np.arange(measure.n_states))
    F = np.stack([e(spins) for e in events], axis=1).astype(float)
    joint = F.T @ (F * probs[:, None])
    single = np.diag(joint)
    slack = joint - np.outer(single, single)
    k = np.unravel_index(np.argmin(slack), slack.shape)
    return ExhaustiveFKG(len(events), len(events) ** 2, float(slack[k]), (events[k[0]].description, events[k[1]].description))


# ---------------------------------------------------------------------------
# Schonmann inequalities and the bicolor proposition


def _blocks(box, A, B):
    A = [tuple(int(c) for c in a) for a in A]
    B = [tuple(int(c) for c in b) for b in B]
    return A, B


def check_schonmann_ab(box: Box, bc: BoundaryCondition, params: ModelParams, A, B, i: int, j: int,
                       measure=None, ident: str = "corr-ab") -> InequalityReport:
    """``P(A = i | B = j) <= P(A = i)`` for ``i != j``."""
    if i == j:
        raise ValueError("corr-ab needs two different colours")
    A, B = _blocks(box, A, B)
    m = measure if measure is not None else ex.exact_measure(box, bc, params)
    ea, eb = all_equal(box, A, i), all_equal(box, B, j)
    lhs = ex.conditional(m, ea, eb)
    rhs = ex.prob(m, ea)
    inst = {"box": box.to_dict(), "bc": bc.to_dict(), "q": params.q, "beta": params.beta,
            "A": A, "B": B, "i": i, "j": j}
    return InequalityReport(ident, inst, lhs, rhs, tolerance=exact_tolerance(params.q**box.n_sites))


def check_schonmann_aa(box: Box, bc: BoundaryCondition, params: ModelParams, A, B, i: int,
                       measure=None) -> InequalityReport:
    """``P(A = i) <= P(A = i | B = i)``."""
    A, B = _blocks(box, A, B)
    m = measure if measure is not None else ex.exact_measure(box, bc, params)
    ea, eb = all_equal(box, A, i), all_equal(box, B, i)
    lhs = ex.prob(m, ea)
    rhs = ex.conditional(m, ea, eb)
    inst = {"box": box.to_dict(), "bc": bc.to_dict(), "q": params.q, "beta": params.beta, "A": A, "B": B, "i": i}
    return InequalityReport("corr-aa", inst, lhs, rhs, tolerance=exact_tolerance(params.q**box.n_sites))


def is_bicolor(bc: BoundaryCondition, i: int, j: int) -> bool:
    return set(bc.colors) <= {i, j}


def check_bicolor(box: Box, bc: BoundaryCondition, params: ModelParams, A, B, i: int = 1, j: int = 2,
                  measure=None) -> InequalityReport:
    """The (corr-ab) form for boundary values in ``{i, j, free}`` only."""
    if not is_bicolor(bc, i, j):
        raise BicolorError(f"boundary colours {bc.colors} are not within {{{i}, {j}}} plus free")
    return check_schonmann_ab(box, bc, params, A, B, i, j, measure, ident="bicolor")


# ---------------------------------------------------------------------------
# van den Berg et al. conditional correlation inequality


def _edge_codes(mask: np.ndarray) -> np.ndarray:
    m = mask.shape[1]
    if m > 62:
        raise ValueError("too many edges for bit codes")
    return (mask.astype(np.int64) << np.arange(m, dtype=np.int64)).sum(axis=1)


def verify_cluster_monotone(view: ClusterView, S, T, values: np.ndarray, given: np.ndarray, name="f") -> None:
    """Check that ``values`` is a function of ``(C_S, C_T)`` on ``given``,
    increasing in ``C_S`` and decreasing in ``C_T``."""
    cs = _edge_codes(view.cluster_edges(S))[given]
    ct = _edge_codes(view.cluster_edges(T))[given]
    v = values[given]
    keys, inv = np.unique(np.stack([cs, ct], axis=1), axis=0, return_inverse=True)
    inv = inv.ravel()
    kv = np.full(len(keys), np.nan)
    kv[inv] = v
    if not np.allclose(kv[inv], v, atol=1e-12):
        raise MonotonicityError(f"{name} is not a function of (C_S, C_T)")
    a_s, a_t = keys[:, 0], keys[:, 1]
    for start in range(0, len(keys), 512):
        s = slice(start, start + 512)
        below = ((a_s[s, None] & ~a_s[None, :]) == 0) & ((a_t[None, :] & ~a_t[s, None]) == 0)
        if np.any(below & (kv[s, None] > kv[None, :] + 1e-12)):
            raise MonotonicityError(f"{name} is not increasing in C_S and decreasing in C_T")


def check_vdberg(graph: Graph, q: float, p, S, T, f: Callable[[ClusterView], np.ndarray],
                 g: Callable[[ClusterView], np.ndarray], verify: bool = True) -> InequalityReport:
    """``phi(f | S !<-> T) phi(g | S !<-> T) <= phi(fg | S !<-> T)``."""
    S, T = [int(v) for v in S], [int(v) for v in T]
    if set(S) & set(T):
        raise ValueError("S and T must be disjoint")
    mu = rc_measure(graph, q, p)
    cond = mu.view.disconnected(WiredBoundary({1: S, 2: T}))
    fv, gv = np.asarray(f(mu.view), float), np.asarray(g(mu.view), float)
    if verify:
        verify_cluster_monotone(mu.view, S, T, fv, cond, "f")
        verify_cluster_monotone(mu.view, S, T, gv, cond, "g")
    w = np.where(cond, mu.weights, 0.0)
    z = w.sum()
    if z <= 0:
        raise ex.NullEventError("S and T are always connected")
    ef, eg, efg = w @ fv / z, w @ gv / z, w @ (fv * gv) / z
    inst = {"n_vertices": graph.n_vertices, "edges": graph.edges.tolist(), "p": graph.p.tolist() if p is None else p,
            "q": q, "S": S, "T": T}
    return InequalityReport("vdberg", inst, float(ef * eg), float(efg), tolerance=EXACT_TOL)


def random_graph(rng: np.random.Generator, n_vertices: int, n_edges: int, p_range=(0.05, 0.95)) -> Graph:
    pairs = list(itertools.combinations(range(n_vertices), 2))
    n_edges = min(n_edges, len(pairs))
    pick = rng.choice(len(pairs), size=n_edges, replace=False)
    edges = np.array([pairs[k] for k in sorted(pick)], dtype=np.int64).reshape(-1, 2)
    return Graph(n_vertices, edges, rng.uniform(*p_range, size=n_edges))


def random_monotone_functional(rng: np.random.Generator, graph: Graph, S, T):
    """A random non-negative functional increasing in ``C_S`` and decreasing in ``C_T``.

    Built as a product of one or two positive combinations of the basic
    terms ``1{v <-> S}``, ``1{v !<-> T}``, ``|C_S|``, ``m - |C_T|`` and
    ``1{e in C_S}``.
    """
    n, m = graph.n_vertices, graph.n_edges

    def term():
        kind = rng.integers(5)
        v = int(rng.integers(n))
        e = int(rng.integers(max(m, 1)))
        if kind == 0:
            return lambda view: view.connected(v, S).astype(float)
        if kind == 1:
            return lambda view: (~view.connected(v, T)).astype(float) if T else np.ones(len(view))
        if kind == 2:
            return lambda view: view.cluster_edges(S).sum(axis=1).astype(float)
        if kind == 3:
            return lambda view: (m - view.cluster_edges(T).sum(axis=1)).astype(float)
        return lambda view: view.cluster_edges(S)[:, e].astype(float) if m else np.zeros(len(view))

    def combo():
        terms = [term() for _ in range(int(rng.integers(1, 4)))]
        coef = rng.uniform(0.1, 1.0, size=len(terms))
        c0 = rng.uniform(0, 0.5)
        return lambda view: c0 + sum(c * t(view) for c, t in zip(coef, terms))

    parts = [combo() for _ in range(int(rng.integers(1, 3)))]

    def f(view):
        out = np.ones(len(view))
        for p_ in parts:
            out = out * p_(view)
        return out

    return f


def random_vdberg_instance(rng: np.random.Generator, max_edges: int = 14):
    """Random graph, ``q`` in ``{1, 1.5, 2, 3}``, disjoint ``S, T`` and two functionals."""
    n = int(rng.integers(3, 8))
    m = int(rng.integers(1, max_edges + 1))
    graph = random_graph(rng, n, m)
    q = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
    verts = rng.permutation(n)
    ks = int(rng.integers(1, n))
    kt = int(rng.integers(1, n - ks + 1))
    S, T = sorted(int(v) for v in verts[:ks]), sorted(int(v) for v in verts[ks:ks + kt])
    f = random_monotone_functional(rng, graph, S, T)
    g = random_monotone_functional(rng, graph, S, T)
    return graph, q, S, T, f, g


# ---------------------------------------------------------------------------
# counter-example search


@dataclass
class Instance:
    """One candidate for :func:`search_violation`."""

    box: Box
    bc: BoundaryCondition
    q: int
    A: list
    B: list
    i: int
    j: int
    label: str = ""


def _check_instance(ident: str, inst: Instance, beta: float) -> InequalityReport:
    params = ModelParams(inst.q, beta)
    if ident in ("corr-ab", "bicolor"):
        return check_schonmann_ab(inst.box, inst.bc, params, inst.A, inst.B, inst.i, inst.j, ident=ident)
    if ident == "corr-aa":
        return check_schonmann_aa(inst.box, inst.bc, params, inst.A, inst.B, inst.i)
    raise ValueError(f"unknown inequality id {ident!r}")


def search_violation(ident: str, instances: Sequence[Instance], betas: Sequence[float] | None = None,
                     budget: int = 1000, bisect_steps: int = 12, mc: Callable | None = None) -> list[InequalityReport]:
    """Grid over ``betas`` for each instance, then bisection on the first violated beta.

    Instances within the exact cap are decided exactly.  Others go to ``mc``,
    a callable ``(ident, instance, beta) -> InequalityReport`` that decides at
    four standard errors.  At most ``budget`` evaluations are spent; an empty
    result means nothing was found within that budget.
    """
    betas = list(betas) if betas is not None else [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0]
    spent = 0
    found = []

    def run(inst, beta):
        nonlocal spent
        spent += 1
        try:
            rep = _check_instance(ident, inst, beta)
        except ex.CapExceeded:
            if mc is None:
                return None
            rep = mc(ident, inst, beta)
        rep.extra["label"] = inst.label
        return rep

    for inst in instances:
        prev = None
        for beta in betas:
            if spent >= budget:
                return found
            rep = run(inst, beta)
            if rep is None:
                break
            if rep.violated:
                lo, hi = prev, beta
                refine = lo is not None and rep.method == "exact"
                if refine:
                    for _ in range(bisect_steps):
                        if spent >= budget:
                            break
                        mid = 0.5 * (lo + hi)
                        r = run(inst, mid)
                        if r is not None and r.violated:
                            hi = mid
                        else:
                            lo = mid
                rep.extra["grid_beta"] = beta
                rep.extra["threshold_beta"] = hi if refine else None
                found.append(rep)
                break
            prev = beta
    return found


def mc_corr_ab(box: Box, bc: BoundaryCondition, params: ModelParams, A, B, i: int, j: int, n_sweeps: int,
               n_chains: int = 4, seed: int = 0, sampler: str = "swendsen-wang", threads=None,
               burn_in=None) -> InequalityReport:
    """Monte Carlo (corr-ab): ``P(A = i | B = j) <= P(A = i)``.

    The error is the larger of the delta-method batch-means error and the
    spread of per-chain slacks, which guards against chains stuck in one
    interface topology.
    """
    from .samplers import run_experiment

    A, B = _blocks(box, A, B)
    ea, eb = all_equal(box, A, i), all_equal(box, B, j)
    f, g, h = run_experiment(sampler, box, bc, params, {"a": ea, "b": eb, "ab": ea & eb}, n_sweeps, n_chains,
                             seed, burn_in=burn_in, threads=threads)
    if g.mean <= 0:
        raise ex.NullEventError("conditioning event never observed")
    cond = h.mean / g.mean
    lin = f.batch_means - h.batch_means / g.mean + h.mean * g.batch_means / g.mean**2
    se = float(np.std(lin, ddof=1) / np.sqrt(len(lin)))
    if n_chains > 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            per_chain = f.chain_means - h.chain_means / g.chain_means
        per_chain = per_chain[np.isfinite(per_chain)]
        if len(per_chain) > 1:
            se = max(se, float(np.std(per_chain, ddof=1) / np.sqrt(len(per_chain))))
    inst = {"box": box.to_dict(), "bc": bc.to_dict(), "q": params.q, "beta": params.beta, "A": A, "B": B,
            "i": i, "j": j, "seed": seed, "n_sweeps": n_sweeps, "n_chains": n_chains, "sampler": sampler}
    return InequalityReport("corr-ab", inst, cond, f.mean, "mc", se, 0.0,
                            {"tau_int": max(f.tau_int, g.tau_int, h.tau_int)})


# ---------------------------------------------------------------------------
# random instance families for the property suites

SMALL_BOXES = (((0, 2), (0, 2)), ((0, 1), (0, 2)), ((0, 3),), ((0, 1), (0, 1), (0, 1)), ((0, 1), (0, 1), (0, 3)))


def random_small_box(rng: np.random.Generator, q: int, max_states: int = 2**16) -> Box:
    from .lattice import make_box

    choices = [r for r in SMALL_BOXES if q ** int(np.prod([hi - lo + 1 for lo, hi in r])) <= max_states]
    r = choices[int(rng.integers(len(choices)))]
    return make_box(len(r), r)


def random_site_sets(rng: np.random.Generator, box: Box, max_size: int = 2):
    """Disjoint non-empty site sets ``A`` and ``B``."""
    n = box.n_sites
    perm = rng.permutation(n)
    ka = int(rng.integers(1, min(max_size, n - 1) + 1))
    kb = int(rng.integers(1, min(max_size, n - ka) + 1))
    sites = [tuple(int(c) for c in s) for s in box.sites]
    return [sites[k] for k in perm[:ka]], [sites[k] for k in perm[ka:ka + kb]]


def random_potts_instance(rng: np.random.Generator, bc_kind: str = "free", q: int | None = None,
                          betas=(0.0, 0.3, 0.7, 1.2, 2.0)):
    """``(box, bc, params, A, B, i, j)`` for the exact corr-ab/corr-aa/bicolor suites.

    ``bc_kind`` is ``free``, ``bicolor`` (values drawn from ``{i, j, free}``)
    or ``random`` (any value in ``0..q``).
    """
    from .lattice import free_bc, random_bc

    q = int(q if q is not None else rng.choice([2, 3]))
    box = random_small_box(rng, q)
    i, j = (int(c) for c in rng.choice(np.arange(1, q + 1), size=2, replace=False))
    if bc_kind == "free":
        bc = free_bc(box)
    elif bc_kind == "bicolor":
        bc = random_bc(box, q, rng, colors=[0, i, j])
    elif bc_kind == "random":
        bc = random_bc(box, q, rng)
    else:
        raise ValueError(f"unknown bc family {bc_kind!r}")
    params = ModelParams(q, float(rng.choice(betas)))
    A, B = random_site_sets(rng, box)
    return box, bc, params, A, B, i, j


def random_ising_instance(rng: np.random.Generator, max_sites: int = MAX_VERIFY_SITES, betas=(0.0, 0.4, 1.0, 2.0)):
    """A deterministic-bc Ising box with at most ``max_sites`` sites."""
    from .lattice import make_box, random_bc

    shapes = [((0, 3), (0, 3)), ((0, 2), (0, 2)), ((0, 1), (0, 1), (0, 3)), ((0, 1), (0, 1), (0, 1)), ((0, 7), (0, 1))]
    shapes = [s for s in shapes if np.prod([hi - lo + 1 for lo, hi in s]) <= max_sites]
    r = shapes[int(rng.integers(len(shapes)))]
    box = make_box(len(r), r)
    return box, random_bc(box, 2, rng), ModelParams(2, float(rng.choice(betas)))
