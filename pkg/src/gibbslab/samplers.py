"""Markov chain samplers for finite boxes with fixed boundary conditions.

All three dynamics leave the finite-volume Gibbs measure invariant:

* heat bath: every site redrawn from its exact conditional law, in site order;
* Swendsen-Wang: bonds between equal spins open with ``p = 1 - exp(-beta)``,
  boundary colour classes act as wired vertices, free clusters are recoloured
  uniformly;
* Wolff: one cluster grown from a uniform site; if it reaches a coloured
  boundary site the move is rejected, otherwise it is recoloured to a uniform
  different colour.  One Wolff "sweep" is ``|Lambda|`` cluster moves.

Randomness comes from numpy's counter-based Philox generator, one stream per
chain spawned from a :class:`numpy.random.SeedSequence`, so chains are
reproducible and independent of the number of worker threads.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numba as nb
import numpy as np

from .clusters import find, union
from .events import Event
from .lattice import Box, BoundaryCondition, ModelParams, agreements

SAMPLERS = ("heat-bath", "swendsen-wang", "wolff")


class RNGConfigError(ValueError):
    """Seeds or stream counts that cannot define independent chains."""


def chain_generators(seed: int, n_chains: int) -> list[np.random.Generator]:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or seed < 0:
        raise RNGConfigError(f"seed must be a non-negative integer, got {seed!r}")
    if not isinstance(n_chains, (int, np.integer)) or n_chains < 1:
        raise RNGConfigError(f"need at least one chain, got {n_chains!r}")
    children = np.random.SeedSequence(int(seed)).spawn(int(n_chains))
    return [np.random.Generator(np.random.Philox(c)) for c in children]


@dataclass
class ChainState:
    spins: np.ndarray
    rng: np.random.Generator
    sweeps: int = 0


def new_chain(box: Box, q: int, seed: int = 0, stream: int = 0, init="random") -> ChainState:
    rng = chain_generators(seed, stream + 1)[stream]
    if isinstance(init, str):
        if init == "random":
            spins = rng.integers(1, q + 1, size=box.n_sites).astype(np.uint8)
        else:
            raise ValueError(f"unknown initial state {init!r}")
    else:
        spins = np.array(init, dtype=np.uint8).copy()
        if spins.shape != (box.n_sites,):
            raise ValueError("initial configuration has the wrong size")
    return ChainState(spins, rng)


# ---------------------------------------------------------------------------
# kernels


@nb.njit(cache=True, nogil=True)
def _heat_bath(spins, nbr, fld, q, beta, u, n_sweeps, out):
    n = spins.shape[0]
    w = np.empty(q)
    for t in range(n_sweeps):
        for x in range(n):
            for c in range(q):
                w[c] = fld[x, c + 1]
            for k in range(nbr.shape[1]):
                y = nbr[x, k]
                if y >= 0:
                    w[spins[y] - 1] += 1.0
            top = w.max()
            tot = 0.0
            for c in range(q):
                w[c] = np.exp(beta * (w[c] - top))
                tot += w[c]
            r = u[t * n + x] * tot
            c = 0
            acc = w[0]
            while r >= acc and c < q - 1:
                c += 1
                acc += w[c]
            spins[x] = c + 1
        if out.shape[0] > 0:
            out[t, :] = spins


@nb.njit(cache=True, nogil=True)
def _swendsen_wang(spins, bonds, p, wsite, wcolor, wp, q, u, n_sweeps, out):
    n = spins.shape[0]
    nb_ = bonds.shape[0]
    nw = wsite.shape[0]
    per = nb_ + nw + n
    parent = np.empty(n + q, dtype=np.int64)
    color = np.zeros(n + q, dtype=np.int64)
    for t in range(n_sweeps):
        base = t * per
        for v in range(n + q):
            parent[v] = v
            color[v] = 0
        for e in range(nb_):
            a = bonds[e, 0]
            b = bonds[e, 1]
            if spins[a] == spins[b] and u[base + e] < p:
                union(parent, a, b)
        for k in range(nw):
            x = wsite[k]
            c = wcolor[k]
            if spins[x] == c and u[base + nb_ + k] < wp[k]:
                union(parent, x, n + c - 1)
        for c in range(1, q + 1):
            r = find(parent, n + c - 1)
            if color[r] != 0 and color[r] != c:
                return -1
            color[r] = c
        for x in range(n):
            r = find(parent, x)
            if color[r] == 0:
                c = int(u[base + nb_ + nw + r] * q)
                if c >= q:
                    c = q - 1
                color[r] = c + 1
            spins[x] = color[r]
        if out.shape[0] > 0:
            out[t, :] = spins
    return 0


@nb.njit(cache=True, nogil=True)
def _wolff(spins, nbr, fld, q, p, wall_p, buf, pos, n_steps, max_per_step, out, steps_per_record, done0):
    n = spins.shape[0]
    mark = np.zeros(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    members = np.empty(n, dtype=np.int64)
    done = done0
    while done < n_steps:
        if pos + max_per_step > buf.shape[0]:
            return done, pos
        seed = int(buf[pos] * n)
        if seed >= n:
            seed = n - 1
        pos += 1
        a = spins[seed]
        stamp = done + 1
        mark[seed] = stamp
        top = 0
        stack[top] = seed
        top += 1
        size = 0
        reject = False
        while top > 0 and not reject:
            top -= 1
            x = stack[top]
            members[size] = x
            size += 1
            k = fld[x, a]
            if k > 0:
                hit = buf[pos] < wall_p[k]
                pos += 1
                if hit:
                    reject = True
                    break
            for j in range(nbr.shape[1]):
                y = nbr[x, j]
                if y >= 0 and spins[y] == a and mark[y] != stamp:
                    take = buf[pos] < p
                    pos += 1
                    if take:
                        mark[y] = stamp
                        stack[top] = y
                        top += 1
        if not reject:
            new = 1 + int(buf[pos] * (q - 1))
            pos += 1
            if new > q - 1:
                new = q - 1
            if new >= a:
                new += 1
            for m in range(size):
                spins[members[m]] = new
            # leftover stack entries are already marked members
            for m in range(top):
                spins[stack[m]] = new
        done += 1
        if out.shape[0] > 0 and done % steps_per_record == 0:
            out[done // steps_per_record - 1, :] = spins
    return done, pos


# ---------------------------------------------------------------------------
# python side


class _Tables:
    def __init__(self, box: Box, bc: BoundaryCondition, params: ModelParams):
        self.n = box.n_sites
        self.q = params.q
        self.beta = float(params.beta)
        self.p = params.p
        self.nbr = box.neighbors
        self.fld = bc.field(params.q)
        self.bonds = np.ascontiguousarray(box.interior_bonds)
        ws, wc = np.nonzero(self.fld[:, 1:])
        self.wsite = ws.astype(np.int64)
        self.wcolor = (wc + 1).astype(np.int64)
        self.wp = -np.expm1(-self.fld[ws, wc + 1] * self.beta)
        self.wall_p = -np.expm1(-np.arange(2 * box.d + 1) * self.beta)
        self.max_wolff = 2 + self.n + len(self.bonds)


def _advance(kind: str, tab: _Tables, state: ChainState, n_sweeps: int, record: bool) -> np.ndarray:
    out = np.empty((n_sweeps if record else 0, tab.n), dtype=np.uint8)
    if n_sweeps == 0:
        return out
    if kind == "heat-bath":
        u = state.rng.random(n_sweeps * tab.n)
        _heat_bath(state.spins, tab.nbr, tab.fld, tab.q, tab.beta, u, n_sweeps, out)
    elif kind == "swendsen-wang":
        per = len(tab.bonds) + len(tab.wsite) + tab.n
        u = state.rng.random(n_sweeps * per)
        if _swendsen_wang(state.spins, tab.bonds, tab.p, tab.wsite, tab.wcolor, tab.wp, tab.q, u, n_sweeps, out) != 0:
            raise AssertionError("a Swendsen-Wang cluster joined two different boundary colours")
    elif kind == "wolff":
        n_steps = n_sweeps * tab.n
        done = 0
        chunk = max(tab.max_wolff * 64, 8 * tab.n * tab.max_wolff // 4)
        while done < n_steps:
            buf = state.rng.random(chunk)
            done, _ = _wolff(state.spins, tab.nbr, tab.fld, tab.q, tab.p, tab.wall_p, buf, 0, n_steps,
                             tab.max_wolff, out, tab.n, done)
    else:
        raise ValueError(f"unknown sampler {kind!r}; choose from {SAMPLERS}")
    state.sweeps += n_sweeps
    return out


def heat_bath_sweep(state: ChainState, box, bc, params, n: int = 1) -> ChainState:
    _advance("heat-bath", _Tables(box, bc, params), state, n, False)
    return state


def swendsen_wang_sweep(state: ChainState, box, bc, params, n: int = 1) -> ChainState:
    _advance("swendsen-wang", _Tables(box, bc, params), state, n, False)
    return state


def wolff_step(state: ChainState, box, bc, params, n: int = 1) -> ChainState:
    """``n`` single-cluster moves (not sweeps)."""
    tab = _Tables(box, bc, params)
    done = 0
    while done < n:
        buf = state.rng.random(tab.max_wolff * 64)
        done, _ = _wolff(state.spins, tab.nbr, tab.fld, tab.q, tab.p, tab.wall_p, buf, 0, n, tab.max_wolff,
                         np.empty((0, tab.n), np.uint8), 1, done)
    return state


# ---------------------------------------------------------------------------
# statistics


def integrated_autocorr_time(x: np.ndarray, c: float = 5.0) -> float:
    """Integrated autocorrelation time with Sokal's self-consistent window."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 4 or np.var(x) == 0:
        return 0.5
    y = x - x.mean()
    f = np.fft.rfft(y, n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n]
    acf /= acf[0]
    tau = 0.5
    for m in range(1, n):
        tau += acf[m]
        if m >= c * tau:
            break
    return float(max(tau, 0.5))


def batch_layout(n_sweeps: int) -> tuple[int, int]:
    """``(n_batches, batch_size)`` with about ``sqrt(n)`` batches."""
    a = max(1, int(np.floor(np.sqrt(n_sweeps))))
    return a, max(1, n_sweeps // a)


@dataclass
class Estimate:
    name: str
    mean: float
    stderr: float
    n_samples: int
    seed: int
    tau_int: float = float("nan")
    n_chains: int = 1
    chain_means: np.ndarray = field(default=None, repr=False)
    batch_means: np.ndarray = field(default=None, repr=False)

    @property
    def between_chain_stderr(self) -> float:
        if self.chain_means is None or len(self.chain_means) < 2:
            return float("nan")
        return float(np.std(self.chain_means, ddof=1) / np.sqrt(len(self.chain_means)))

    @property
    def conservative_stderr(self) -> float:
        b = self.between_chain_stderr
        return self.stderr if np.isnan(b) else max(self.stderr, b)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mean": self.mean,
            "stderr": self.stderr,
            "between_chain_stderr": self.between_chain_stderr,
            "n_samples": self.n_samples,
            "n_chains": self.n_chains,
            "tau_int": self.tau_int,
            "seed": self.seed,
        }


def _as_observable(obs):
    if isinstance(obs, Event):
        return lambda s: obs(s).astype(float)
    return obs


def _run_chain(kind, tab, state, observables, n_sweeps, burn_in, block):
    names = list(observables)
    fns = [_as_observable(observables[k]) for k in names]
    if burn_in is None:
        pilot = _advance(kind, tab, state, 1000, True)
        series = pilot.astype(np.int64)
        e = np.array([np.sum(series[:, tab.bonds[:, 0]] == series[:, tab.bonds[:, 1]], axis=1)]).ravel() if len(tab.bonds) else np.zeros(len(series))
        tau = integrated_autocorr_time(e)
        extra = max(0, int(np.ceil(10 * tau)) - 1000)
        _advance(kind, tab, state, extra, False)
    else:
        _advance(kind, tab, state, burn_in, False)
    n_batches, b = batch_layout(n_sweeps)
    used = n_batches * b
    bm = np.zeros((len(names), n_batches))
    sums = np.zeros(len(names))
    sq = np.zeros(len(names))
    per_block = b * max(1, block // b)
    done = 0
    while done < used:
        m = min(per_block, used - done)
        rec = _advance(kind, tab, state, m, True)
        for k, fn in enumerate(fns):
            vals = np.asarray(fn(rec), dtype=float)
            sums[k] += vals.sum()
            sq[k] += np.dot(vals, vals)
            bm[k, done // b:(done + m) // b] = vals.reshape(-1, b).mean(axis=1)
        done += m
    _advance(kind, tab, state, n_sweeps - used, False)
    return bm, sums, sq, used


def run_experiment(sampler: str, box: Box, bc: BoundaryCondition, params: ModelParams,
                   observables: Mapping[str, Callable | Event], n_sweeps: int, n_chains: int = 1,
                   seed: int = 0, burn_in: int | None = None, init="random", threads: int | None = None,
                   block: int = 4096, batches_csv=None) -> list[Estimate]:
    """Independent seeded chains; batch-means errors pooled over chains.

    ``burn_in=None`` runs a 1000-sweep pilot and then extends the burn-in to
    ten integrated autocorrelation times of the bond energy when longer.
    """
    if sampler not in SAMPLERS:
        raise ValueError(f"unknown sampler {sampler!r}; choose from {SAMPLERS}")
    if n_sweeps < 1:
        raise ValueError("n_sweeps must be >= 1")
    rngs = chain_generators(seed, n_chains)
    tab = _Tables(box, bc, params)
    names = list(observables)

    def one(k):
        rng = rngs[k]
        if isinstance(init, str) and init == "random":
            spins = rng.integers(1, params.q + 1, size=box.n_sites).astype(np.uint8)
        elif callable(init):
            spins = np.array(init(k), dtype=np.uint8)
        else:
            spins = np.array(init, dtype=np.uint8).copy()
        state = ChainState(spins, rng)
        return _run_chain(sampler, tab, state, observables, n_sweeps, burn_in, block)

    workers = threads or 1
    if workers > 1 and n_chains > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, range(n_chains)))
    else:
        results = [one(k) for k in range(n_chains)]
    out = []
    for j, name in enumerate(names):
        bms = np.concatenate([r[0][j] for r in results])
        chain_means = np.array([r[0][j].mean() for r in results])
        total = sum(r[3] for r in results)
        mean = float(bms.mean())
        se = float(np.std(bms, ddof=1) / np.sqrt(len(bms))) if len(bms) > 1 else 0.0
        var_x = sum(r[2][j] for r in results) / total - mean**2
        b = results[0][3] // len(results[0][0][j])
        tau = float(b * np.var(bms, ddof=1) / (2 * var_x)) if var_x > 1e-15 and len(bms) > 1 else 0.5
        out.append(Estimate(name, mean, se, total, seed, tau, n_chains, chain_means, bms))
    if batches_csv is not None:
        write_batches_csv(out, batches_csv)
    return out


def write_batches_csv(estimates: list[Estimate], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["batch"] + [e.name for e in estimates])
        for k in range(len(estimates[0].batch_means)):
            w.writerow([k] + [repr(float(e.batch_means[k])) for e in estimates])


def ratio_estimate(num: Estimate, den: Estimate) -> tuple[float, float]:
    """Ratio of means with a delta-method error from paired batch means."""
    return mixture_ratio([(1.0, num, den)])


def mixture_ratio(parts) -> tuple[float, float]:
    """``sum w_k a_k / sum w_k b_k`` for independent ensembles ``(w_k, a_k, b_k)``.

    ``a_k`` and ``b_k`` must come from the same run (shared batch layout).
    """
    A = sum(w * a.mean for w, a, _ in parts)
    B = sum(w * b.mean for w, _, b in parts)
    if B <= 0:
        raise ZeroDivisionError("denominator estimate is zero")
    var = 0.0
    for w, a, b in parts:
        n = len(a.batch_means)
        cov = np.cov(np.vstack([a.batch_means, b.batch_means]), ddof=1) / n if n > 1 else np.zeros((2, 2))
        var += w**2 * (cov[0, 0] / B**2 + A**2 * cov[1, 1] / B**4 - 2 * A * cov[0, 1] / B**3)
    return A / B, float(np.sqrt(max(var, 0.0)))


def energy_observable(box: Box, bc: BoundaryCondition, q: int):
    def agree(spins):
        return agreements(box, bc, spins, q).astype(float)

    return agree
