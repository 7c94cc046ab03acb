"""Exact finite-volume Gibbs measures.

Two exact engines share one query interface (``log_z``, ``marginal``,
``prob``):

* :func:`enumerate_measure` lists all ``q**n`` configurations.  It stores the
  integer number of agreeing bonds per configuration, so the same table serves
  every ``beta`` (see :meth:`ExactMeasure.with_beta`).
* :class:`TransferMeasure` eliminates sites one at a time along a transfer
  axis, keeping a frontier of one cross-section.  Cost is ``q**(s + 1)`` per
  site for cross-section size ``s``, which makes long thin boxes exact.

Configurations are indexed little-endian: state ``k`` has spin
``1 + (k // q**i) % q`` at site ``i``.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .events import Event
from .lattice import Box, BoundaryCondition, DomainError, ModelParams, make_box

DEFAULT_CAP = 2**26
CHUNK = 2**20


class CapExceeded(ValueError):
    """The requested exact computation is larger than the configured cap."""


class NullEventError(ValueError):
    """Conditioning on an event of probability zero."""


def decode(idx: np.ndarray, n: int, q: int, sites: Sequence[int] | None = None) -> np.ndarray:
    """Spins ``(len(idx), len(sites))`` of the given state indices."""
    idx = np.asarray(idx, dtype=np.int64)
    sites = range(n) if sites is None else sites
    out = np.empty((len(idx), len(sites)), dtype=np.uint8)
    for col, k in enumerate(sites):
        out[:, col] = (idx // q**k) % q + 1
    return out


def _agreements_chunk(start, stop, n, q, bonds, fld):
    idx = np.arange(start, stop, dtype=np.int64)
    spins = decode(idx, n, q)
    total = np.zeros(stop - start, dtype=np.int16)
    for a, b in bonds:
        total += spins[:, a] == spins[:, b]
    for k in range(n):
        if fld[k, 1:].any():
            total += fld[k][spins[:, k]].astype(np.int16)
    return total


class ExactMeasure:
    """Full distribution of a finite box, stored as per-state agreement counts."""

    def __init__(self, box, bc, params, agree, _cache=None):
        self.box = box
        self.bc = bc
        self.params = params
        self.agree = agree
        self._cache = {} if _cache is None else _cache
        self._amin = int(agree.min())
        if "dos" not in self._cache:
            self._cache["dos"] = np.bincount(agree - self._amin)
        dos = self._cache["dos"]
        energies = np.arange(len(dos)) + self._amin
        with np.errstate(divide="ignore"):
            self.log_z = float(logsumexp(params.beta * energies + np.log(dos)))
        self._energy_levels = energies

    @property
    def q(self) -> int:
        return self.params.q

    @property
    def n_states(self) -> int:
        return len(self.agree)

    def with_beta(self, beta: float) -> "ExactMeasure":
        """Same box and boundary at another inverse temperature, no re-enumeration."""
        return ExactMeasure(self.box, self.bc, self.params.with_beta(beta), self.agree, self._cache)

    def log_probs(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        return self.params.beta * self.agree[start:stop] - self.log_z

    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs())

    def spins(self, idx) -> np.ndarray:
        return decode(idx, self.box.n_sites, self.q)

    def _site_dos(self, sites: tuple[int, ...]) -> np.ndarray:
        """Joint counts ``(energy level, local state)`` for a set of sites."""
        key = ("site_dos", sites)
        if key not in self._cache:
            q, k = self.q, len(sites)
            n_local = q**k
            n_levels = len(self._energy_levels)
            counts = np.zeros(n_levels * n_local, dtype=np.int64)
            for start in range(0, self.n_states, CHUNK):
                stop = min(start + CHUNK, self.n_states)
                idx = np.arange(start, stop, dtype=np.int64)
                code = np.zeros(stop - start, dtype=np.int64)
                for j, s in enumerate(sites):
                    code += ((idx // q**s) % q) * q**j
                lev = self.agree[start:stop].astype(np.int64) - self._amin
                counts += np.bincount(lev * n_local + code, minlength=len(counts))
            self._cache[key] = counts.reshape(n_levels, n_local)
        return self._cache[key]

    def marginal(self, sites: Sequence[int]) -> np.ndarray:
        """Joint law of the given site indices, flat array of length ``q**k`` (first site fastest)."""
        sites = tuple(int(s) for s in sites)
        if len(sites) == 0:
            return np.ones(1)
        table = self._site_dos(sites)
        with np.errstate(divide="ignore"):
            logw = self.params.beta * self._energy_levels - self.log_z
        w = np.exp(logw)
        return w @ table

    def prob(self, event: Event) -> float:
        return prob(self, event)

    def expect(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        """Expectation of a vectorised function of full configurations."""
        total = 0.0
        for start in range(0, self.n_states, CHUNK):
            stop = min(start + CHUNK, self.n_states)
            p = np.exp(self.log_probs(start, stop))
            total += float(np.dot(p, fn(self.spins(np.arange(start, stop)))))
        return total


class TableMeasure:
    """Measure given by an explicit probability vector over all configurations."""

    def __init__(self, box, bc, params, probs):
        self.box, self.bc, self.params = box, bc, params
        self._p = np.asarray(probs, dtype=float)
        if len(self._p) != params.q**box.n_sites:
            raise DomainError("probability table does not match q**n")

    @property
    def q(self) -> int:
        return self.params.q

    @property
    def n_states(self) -> int:
        return len(self._p)

    def probs(self) -> np.ndarray:
        return self._p

    def spins(self, idx) -> np.ndarray:
        return decode(idx, self.box.n_sites, self.q)

    def marginal(self, sites):
        sites = [int(s) for s in sites]
        idx = np.arange(self.n_states, dtype=np.int64)
        code = np.zeros(self.n_states, dtype=np.int64)
        for j, s in enumerate(sites):
            code += ((idx // self.q**s) % self.q) * self.q**j
        return np.bincount(code, weights=self._p, minlength=self.q ** len(sites))

    def expect(self, fn) -> float:
        return float(np.dot(self._p, fn(self.spins(np.arange(self.n_states)))))

    def prob(self, event: Event) -> float:
        return prob(self, event)


def total_variation(a, b) -> float:
    """TV distance between probability vectors or measures exposing ``probs()``."""
    a, b = (x.probs() if hasattr(x, "probs") else np.asarray(x) for x in (a, b))
    return 0.5 * float(np.abs(a - b).sum())


def enumerate_measure(box: Box, bc: BoundaryCondition, params: ModelParams, cap: int = DEFAULT_CAP, threads: int = 1) -> ExactMeasure:
    """Exact Gibbs measure by listing every configuration."""
    if bc.box != box:
        raise DomainError("boundary condition belongs to a different box")
    n, q = box.n_sites, params.q
    n_states = q**n
    if n_states > cap:
        raise CapExceeded(f"q^|Lambda| = {q}^{n} = {n_states} states exceeds the cap {cap}")
    fld = bc.field(q)
    bonds = [tuple(b) for b in box.interior_bonds]
    bounds = [(s, min(s + CHUNK, n_states)) for s in range(0, n_states, CHUNK)]
    agree = np.empty(n_states, dtype=np.int16)

    def work(span):
        s, e = span
        agree[s:e] = _agreements_chunk(s, e, n, q, bonds, fld)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, bounds))
    else:
        for span in bounds:
            work(span)
    return ExactMeasure(box, bc, params, agree)


# ---------------------------------------------------------------------------
# transfer matrix


def _transfer_order(box: Box, axis: int) -> np.ndarray:
    axis %= box.d
    order_axes = [axis] + [k for k in range(box.d) if k != axis]
    keys = [box.sites[:, k] for k in reversed(order_axes)]
    return np.lexsort(keys)


class TransferMeasure:
    """Exact measure of a thin box by site-by-site elimination along ``axis``."""

    def __init__(self, box: Box, bc: BoundaryCondition, params: ModelParams, axis: int = -1, cap: int = DEFAULT_CAP):
        if bc.box != box:
            raise DomainError("boundary condition belongs to a different box")
        self.box, self.bc, self.params = box, bc, params
        self.axis = axis % box.d
        self.width = box.n_sites // box.shape[self.axis]
        if params.q ** (self.width + 1) > cap:
            raise CapExceeded(
                f"cross-section of {self.width} sites needs q^(s+1) = {params.q ** (self.width + 1)} > cap {cap}"
            )
        self.order = _transfer_order(box, self.axis)
        pos = np.empty(box.n_sites, dtype=np.int64)
        pos[self.order] = np.arange(box.n_sites)
        self._back = []
        for t, site in enumerate(self.order):
            nb = box.neighbors[site]
            earlier = sorted(t - pos[x] for x in nb if x >= 0 and pos[x] < t)
            assert all(off <= self.width for off in earlier)
            self._back.append(earlier)
        self._field = bc.field(params.q)[:, 1:].astype(float)
        self._cache = {}
        self.log_z = self.log_z_fixed({})

    @property
    def q(self) -> int:
        return self.params.q

    def log_z_fixed(self, constraints: dict[int, Sequence[int]]) -> float:
        """Log partition function restricted to ``site -> allowed colours``."""
        key = tuple(sorted((int(k), tuple(sorted(v))) for k, v in constraints.items()))
        if key in self._cache:
            return self._cache[key]
        q, beta, s = self.q, self.params.beta, self.width
        # linear domain with a running log scale; far faster than logsumexp
        bond = np.exp(np.equal.outer(np.arange(q), np.arange(q)) * beta)
        v = np.ones(())
        log_scale = 0.0
        for t, site in enumerate(self.order):
            r = v.ndim
            local = np.exp(beta * self._field[site])
            if site in constraints:
                mask = np.zeros(q)
                mask[np.asarray(constraints[site]) - 1] = 1.0
                local = local * mask
            w = v[..., None] * local
            for off in self._back[t]:
                shape = [1] * (r + 1)
                shape[r - off] = q
                shape[r] = q
                w = w * bond.reshape(shape)
            if w.ndim > s:
                w = w.sum(axis=0)
            top = w.max()
            if top <= 0:
                self._cache[key] = -np.inf
                return -np.inf
            v = w / top
            log_scale += np.log(top)
        out = float(log_scale + np.log(v.sum()))
        self._cache[key] = out
        return out

    def marginal(self, sites: Sequence[int]) -> np.ndarray:
        sites = [int(s) for s in sites]
        q, k = self.q, len(sites)
        out = np.empty(q**k)
        for code in range(q**k):
            cons = {}
            feasible = True
            for j, s in enumerate(sites):
                c = (code // q**j) % q + 1
                if s in cons and cons[s] != [c]:
                    feasible = False
                cons[s] = [c]
            out[code] = np.exp(self.log_z_fixed(cons) - self.log_z) if feasible else 0.0
        return out

    def prob(self, event: Event) -> float:
        return prob(self, event)

    def with_beta(self, beta: float) -> "TransferMeasure":
        return TransferMeasure(self.box, self.bc, self.params.with_beta(beta), self.axis)


def transfer_matrix_logZ(box: Box, bc: BoundaryCondition, params: ModelParams, axis: int = -1, cap: int = DEFAULT_CAP) -> float:
    return TransferMeasure(box, bc, params, axis, cap).log_z


def exact_measure(box, bc, params, cap: int = DEFAULT_CAP, method: str = "auto"):
    """Enumeration when it fits, otherwise the transfer matrix along the longest axis.

    ``method="transfer"`` forces the transfer matrix, which is much cheaper for
    marginals of a few sites on thin boxes.
    """
    if method not in ("auto", "enumerate", "transfer"):
        raise ValueError(f"unknown method {method!r}")
    if method == "enumerate" or (method == "auto" and params.q**box.n_sites <= cap):
        return enumerate_measure(box, bc, params, cap)
    axis = int(np.argmax(box.shape))
    return TransferMeasure(box, bc, params, axis, cap)


# ---------------------------------------------------------------------------
# mixtures and queries


class MixtureMeasure:
    """Convex combination of exact measures on the same box and model."""

    def __init__(self, components: Sequence[tuple[float, object]]):
        weights = np.array([w for w, _ in components], dtype=float)
        if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0, atol=1e-12):
            raise ValueError(f"mixture weights must be >= 0 and sum to 1, got {weights}")
        first = components[0][1]
        for _, m in components:
            if m.box != first.box or m.params.q != first.params.q or m.params.beta != first.params.beta:
                raise ValueError("mixture components must share box and parameters")
        self.components = [(float(w), m) for w, m in components]
        self.box, self.params = first.box, first.params

    @property
    def q(self) -> int:
        return self.params.q

    def marginal(self, sites):
        return sum(w * m.marginal(sites) for w, m in self.components)

    def prob(self, event: Event) -> float:
        return sum(w * prob(m, event) for w, m in self.components)


def symmetric_mixture(a, b) -> MixtureMeasure:
    return MixtureMeasure([(0.5, a), (0.5, b)])


_TABLE_LIMIT = 2**16


def _local_table_mask(event: Event, n: int, q: int) -> np.ndarray:
    k = len(event.support)
    idx = np.arange(q**k, dtype=np.int64)
    full = np.ones((q**k, n), dtype=np.uint8)
    for j, s in enumerate(event.support):
        full[:, s] = (idx // q**j) % q + 1
    return np.asarray(event.fn(full), dtype=bool)


def prob(measure, event: Event) -> float:
    """Exact probability of ``event``; mixtures combine their components."""
    if isinstance(measure, MixtureMeasure):
        return measure.prob(event)
    q, n = measure.q, measure.box.n_sites
    if event.support is not None and q ** len(event.support) <= _TABLE_LIMIT:
        table = measure.marginal(event.support)
        return float(table[_local_table_mask(event, n, q)].sum())
    if isinstance(measure, TransferMeasure):
        raise ValueError("transfer-matrix measures need events with a small declared support")
    return measure.expect(lambda s: event(s).astype(float))


def conditional(measure, target: Event, given: Event) -> float:
    pg = prob(measure, given)
    if pg <= 0:
        raise NullEventError(f"conditioning event {given.name} has probability {pg}")
    return prob(measure, target & given) / pg


# ---------------------------------------------------------------------------
# DLR consistency


def dlr_check(box: Box, bc: BoundaryCondition, params: ModelParams, subbox: Box, cap: int = DEFAULT_CAP) -> float:
    """Max total-variation gap between the conditional law on ``subbox`` and its Gibbs kernel."""
    for s in subbox.sites:
        if not box.contains(s):
            raise ValueError(f"subbox site {tuple(s)} is not inside the box")
    mu = enumerate_measure(box, bc, params, cap)
    q, n = params.q, box.n_sites
    inner = [box.site_index(s) for s in subbox.sites]
    outer = [i for i in range(n) if i not in set(inner)]
    n_in, n_out = q ** len(inner), q ** len(outer)
    table = np.zeros((n_out, n_in))
    for start in range(0, mu.n_states, CHUNK):
        stop = min(start + CHUNK, mu.n_states)
        idx = np.arange(start, stop, dtype=np.int64)
        code_in = np.zeros(stop - start, dtype=np.int64)
        for j, s in enumerate(inner):
            code_in += ((idx // q**s) % q) * q**j
        code_out = np.zeros(stop - start, dtype=np.int64)
        for j, s in enumerate(outer):
            code_out += ((idx // q**s) % q) * q**j
        table[code_out, code_in] = np.exp(mu.log_probs(start, stop))
    mass = table.sum(axis=1)
    live = np.nonzero(mass > 0)[0]
    cond = table[live] / mass[live, None]
    out_spins = decode(live, len(outer), q)
    by_site = {s: out_spins[:, j] for j, s in enumerate(outer)}
    keys = np.zeros((len(live), len(subbox.boundary)), dtype=np.uint8)
    for c, site in enumerate(subbox.boundary):
        t = tuple(int(x) for x in site)
        keys[:, c] = by_site[box.index[t]] if t in box.index else bc.value_at(t)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    worst = 0.0
    for u, row in enumerate(uniq):
        kernel = enumerate_measure(subbox, BoundaryCondition(subbox, row), params, cap).probs()
        tv = 0.5 * np.abs(cond[inv == u] - kernel).sum(axis=1)
        worst = max(worst, float(tv.max()))
    return worst


def subbox_of(box: Box, lo: Sequence[int], hi: Sequence[int]) -> Box:
    return make_box(box.d, list(zip(lo, hi)))


# ---------------------------------------------------------------------------
# exports


def marginal_rows(measure) -> list[dict]:
    rows = []
    for i, site in enumerate(measure.box.sites):
        m = measure.marginal([i])
        for c in range(measure.q):
            rows.append({"site": " ".join(map(str, site)), "color": c + 1, "probability": float(m[c])})
    return rows


def write_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def event_table(measure, events: dict[str, Event]) -> list[dict]:
    return [{"event": name, "probability": prob(measure, ev)} for name, ev in events.items()]


def summary(measure) -> dict:
    return {
        "box": measure.box.to_dict(),
        "bc": measure.bc.to_dict(),
        "q": measure.params.q,
        "beta": measure.params.beta,
        "log_z": measure.log_z,
        "engine": "enumeration" if isinstance(measure, ExactMeasure) else "transfer-matrix",
    }


def write_json(data: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
