"""Named observables and the non-weak-limit witnesses.

Every ``beta`` here is the Potts-form inverse temperature (``ModelParams``);
for Ising runs ``beta_Potts = 2 beta_Ising``.  Witness boxes must be
reflection symmetric in the last axis, with range ``[-H, H-1]`` so that
``z -> -z-1`` maps the box onto itself.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import exact as ex
from .events import Event, block_sites, majority_is, minus_at, plus_at, site_is
from .inequalities import EXACT_TOL, MC_SIGMAS, check_bicolor, exact_tolerance
from .lattice import (MINUS, PLUS, Box, BoundaryCondition, DomainError, ModelParams, centered_box,
                      dobrushin_bc, pure_bc)
from .samplers import Estimate, mixture_ratio, run_experiment

# reproducible instances used by the CLI defaults, the demos and the acceptance suite
PINNED_WITNESS = {"box": (2, 2, 6), "beta": 0.5, "z": 1}
PINNED_POTTS = {"box": (2, 2, 6), "beta": 0.5, "q": 3, "z": 1}
PINNED_QUADRANT = {"size": 24, "beta": 1.4, "q": 4, "n_sweeps": 40000, "n_chains": 8, "seed": 0}

# ---------------------------------------------------------------------------
# geometry helpers


def check_symmetric(box: Box) -> int:
    """Return ``H`` for a last-axis range ``[-H, H-1]``, else raise."""
    lo, hi = box.ranges[-1]
    if lo != -hi - 1:
        raise DomainError(f"box is not symmetric under z -> -z-1: last axis range [{lo}, {hi}]")
    return hi + 1


def mirror(site) -> tuple[int, ...]:
    site = tuple(int(c) for c in site)
    return site[:-1] + (-site[-1] - 1,)


def _column_site(box: Box, z: int) -> tuple[int, ...]:
    site = tuple([0] * (box.d - 1) + [int(z)])
    if not box.contains(site):
        raise DomainError(f"site {site} is outside {box}")
    return site


def dobrushin_pair(box: Box, colors=(PLUS, MINUS)) -> tuple[BoundaryCondition, BoundaryCondition]:
    """The two Dobrushin conditions: ``colors[0]`` above the plane, then swapped."""
    return dobrushin_bc(box, colors=colors), dobrushin_bc(box, colors=colors[::-1])


def write_report(report, path) -> None:
    data = report.to_dict() if hasattr(report, "to_dict") else report
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Estimate):
        return o.to_dict()
    return str(o)


# ---------------------------------------------------------------------------
# magnetization


def estimate_mstar(d: int, beta: float, size: int, n_sweeps: int = 20000, seed: int = 0,
                   sampler: str = "swendsen-wang", n_chains: int = 2, threads=None) -> Estimate:
    """Centre-site Ising magnetization under the pure plus condition."""
    box = centered_box(*([size] * d))
    centre = tuple([0] * d)
    est = run_experiment(sampler, box, pure_bc(box, PLUS), ModelParams(2, beta),
                         {"m": lambda s, i=box.site_index(centre): np.where(s[:, i] == PLUS, 1.0, -1.0)},
                         n_sweeps, n_chains, seed, threads=threads)[0]
    est.name = f"mstar_d{d}"
    return est


def alpha_mixture_ratio(alpha: float, mstar2: float, mstar3: float) -> float:
    """``m2 / ((1 + m3)/2 + (1 - alpha)/alpha * (1 - m2)/2)``."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if not 0 <= mstar2 <= mstar3 <= 1:
        raise ValueError("need 0 <= m*_2 <= m*_3 <= 1")
    return mstar2 / ((1 + mstar3) / 2 + (1 - alpha) / alpha * (1 - mstar2) / 2)


def alpha_mixture_condition(alpha: float, mstar2: float, mstar3: float) -> bool:
    """Whether the alpha-weighted Dobrushin mixture still beats the FKG ceiling 1/2."""
    return alpha_mixture_ratio(alpha, mstar2, mstar3) > 0.5


# ---------------------------------------------------------------------------
# mixture witnesses


@dataclass
class WitnessReport:
    kind: str
    instance: dict
    lhs: float
    fkg_bound: float
    floor: float
    method: str
    stderr: float = 0.0
    margin: float = 0.0
    chain: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if self.method == "exact":
            return "witness" if self.lhs > self.fkg_bound + self.margin else "no witness"
        return "witness" if self.lhs - self.fkg_bound > MC_SIGMAS * self.stderr + self.margin else "no witness"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict
        return d


def _loc_chain(mp, mm, ez_plus: Event, ehat_minus: Event, ez_minus: Event, ehat_plus: Event) -> dict:
    """Each step of the localisation chain on exact measures."""
    mix = ex.symmetric_mixture(mp, mm)
    joint_pm = ex.prob(mp, ez_plus & ehat_minus)
    joint_mix = ex.prob(mix, ez_plus & ehat_minus)
    hat_mix = ex.prob(mix, ehat_minus)
    lhs = joint_mix / hat_mix
    zm, hp = ex.prob(mp, ez_minus), ex.prob(mp, ehat_plus)
    union = 1 - zm - hp
    mag = ex.prob(mp, ez_plus) - zm
    return {
        "conditional": lhs,
        "mixture_hat_minus": hat_mix,
        "mixture_z_plus": ex.prob(mix, ez_plus),
        "mixture_joint": joint_mix,
        "half_pm_joint": 0.5 * joint_pm,
        "pm_joint": joint_pm,
        "union_bound": union,
        "pm_magnetization": mag,
        "pm_magnetization_hat": ex.prob(mp, ehat_plus) - ex.prob(mp, ehat_minus),
        "step_mixture_ge_half_pm": joint_mix >= 0.5 * joint_pm - EXACT_TOL,
        "step_conditional_ge_pm_joint": lhs >= joint_pm - EXACT_TOL,
        "step_union_bound": joint_pm >= union - EXACT_TOL,
        "step_equality": abs(union - mag) < EXACT_TOL,
    }


def _mc_mixture_conditional(box, params, bcs, target: Event, given: Event, n_sweeps, n_chains, seed,
                            sampler, threads, burn_in=None):
    """``sum_k P_k(target, given) / sum_k P_k(given)`` with ensembles weighted 1/2."""
    parts, singles = [], []
    for k, bc in enumerate(bcs):
        est = run_experiment(sampler, box, bc, params, {"joint": target & given, "given": given, "target": target},
                             n_sweeps, n_chains, seed + 7919 * k, burn_in=burn_in, threads=threads)
        parts.append((0.5, est[0], est[1]))
        singles.append(est[2])
    r, se = mixture_ratio(parts)
    marg = 0.5 * (singles[0].mean + singles[1].mean)
    marg_se = 0.5 * float(np.hypot(singles[0].stderr, singles[1].stderr))
    return r, se, marg, marg_se, parts


def mixture_conditional_witness(box: Box, params: ModelParams, z: int = 1, seed: int = 0, method: str = "auto",
                                n_sweeps: int = 20000, n_chains: int = 2, sampler: str = "heat-bath",
                                threads=None, cap: int = ex.DEFAULT_CAP) -> WitnessReport:
    """``mu(sigma_z = + | sigma_zhat = -)`` under the symmetric Dobrushin mixture versus 1/2."""
    if params.q != 2:
        raise ValueError("the Ising witness needs q = 2")
    check_symmetric(box)
    if z < 0:
        raise DomainError("z must be >= 0")
    zs = _column_site(box, z)
    zh = _column_site(box, -z - 1)
    bp, bm = dobrushin_pair(box)
    inst = {"box": box.to_dict(), "beta": params.beta, "z": list(zs), "zhat": list(zh)}
    ez_p, ez_m, eh_p, eh_m = plus_at(box, zs), minus_at(box, zs), plus_at(box, zh), minus_at(box, zh)
    if method in ("auto", "exact"):
        try:
            mp = ex.exact_measure(box, bp, params, cap, method="transfer" if box.n_sites > 16 else "auto")
            mm = ex.exact_measure(box, bm, params, cap, method="transfer" if box.n_sites > 16 else "auto")
        except ex.CapExceeded:
            if method == "exact":
                raise
        else:
            chain = _loc_chain(mp, mm, ez_p, eh_m, ez_m, eh_p)
            return WitnessReport("ising-mixture", inst, chain["conditional"], chain["mixture_z_plus"],
                                 chain["pm_magnetization"], "exact", 0.0, exact_tolerance(2**box.n_sites), chain)
    r, se, marg, marg_se, parts = _mc_mixture_conditional(box, params, (bp, bm), ez_p, eh_m, n_sweeps, n_chains,
                                                          seed, sampler, threads)
    chain = {"conditional": r, "mixture_z_plus": marg, "mixture_z_plus_stderr": marg_se,
             "pm_joint": parts[0][1].mean, "seed": seed, "n_sweeps": n_sweeps}
    return WitnessReport("ising-mixture", inst, r, 0.5, float("nan"), "mc", se, 0.0, chain)


def majority_witness(box: Box, params: ModelParams, z: int, m: int, seed: int = 0, method: str = "auto",
                     n_sweeps: int = 20000, n_chains: int = 2, sampler: str = "heat-bath", threads=None,
                     cap: int = ex.DEFAULT_CAP) -> WitnessReport:
    """Block-majority version: ``mu(M_z = + | M_zhat = -)`` versus the ceiling ``mu(M_z = +) = 1/2``.

    Both blocks must lie inside their own half-space (``z - m//2 >= 0``).
    """
    if m % 2 != 1 or m < 1:
        raise ValueError(f"block side must be odd, got {m}")
    if params.q != 2:
        raise ValueError("the Ising witness needs q = 2")
    check_symmetric(box)
    if z - m // 2 < 0:
        raise DomainError(f"block of side {m} at height {z} crosses the plane z = -1/2")
    zs, zh = _column_site(box, z), _column_site(box, -z - 1)
    block_sites(box, zs, m)
    block_sites(box, zh, m)
    bp, bm = dobrushin_pair(box)
    mz_p, mz_m = majority_is(box, zs, m, +1), majority_is(box, zs, m, -1)
    mh_p, mh_m = majority_is(box, zh, m, +1), majority_is(box, zh, m, -1)
    inst = {"box": box.to_dict(), "beta": params.beta, "z": list(zs), "zhat": list(zh), "m": m}
    if method in ("auto", "exact"):
        try:
            if 2 ** box.n_sites > cap and 2 ** (2 * m**box.d) > 2**16:
                raise ex.CapExceeded("majority events are too large for the transfer-matrix path")
            mp = ex.exact_measure(box, bp, params, cap)
            mm = ex.exact_measure(box, bm, params, cap)
        except ex.CapExceeded:
            if method == "exact":
                raise
        else:
            chain = _loc_chain(mp, mm, mz_p, mh_m, mz_m, mh_p)
            return WitnessReport("ising-majority", inst, chain["conditional"], chain["mixture_z_plus"],
                                 chain["pm_magnetization"], "exact", 0.0, exact_tolerance(2**box.n_sites), chain)
    r, se, marg, marg_se, parts = _mc_mixture_conditional(box, params, (bp, bm), mz_p, mh_m, n_sweeps, n_chains,
                                                          seed, sampler, threads)
    chain = {"conditional": r, "mixture_z_plus": marg, "mixture_z_plus_stderr": marg_se, "seed": seed,
             "n_sweeps": n_sweeps}
    return WitnessReport("ising-majority", inst, r, 0.5, float("nan"), "mc", se, 0.0, chain)


def potts_dobrushin_witness(box: Box, params: ModelParams, z: int = 1, seed: int = 0, method: str = "auto",
                            n_sweeps: int = 20000, n_chains: int = 2, sampler: str = "heat-bath", threads=None,
                            cap: int = ex.DEFAULT_CAP) -> WitnessReport:
    """``P(sigma_z = 1 | sigma_zhat = 2)`` under ``(P^12 + P^21)/2`` against its marginal ``P(sigma_z = 1)``.

    For each single bicolor measure the ceiling holds (checked and recorded);
    the verdict is "witness" when the mixture breaks it.
    """
    if params.q < 3:
        raise ValueError("the Potts witness needs q >= 3")
    check_symmetric(box)
    zs, zh = _column_site(box, z), _column_site(box, -z - 1)
    b12, b21 = dobrushin_pair(box, colors=(1, 2))
    t, given = site_is(box, zs, 1), site_is(box, zh, 2)
    inst = {"box": box.to_dict(), "q": params.q, "beta": params.beta, "z": list(zs), "zhat": list(zh)}
    if method in ("auto", "exact"):
        try:
            m12 = ex.exact_measure(box, b12, params, cap, method="transfer" if box.n_sites > 12 else "auto")
            m21 = ex.exact_measure(box, b21, params, cap, method="transfer" if box.n_sites > 12 else "auto")
        except ex.CapExceeded:
            if method == "exact":
                raise
        else:
            mix = ex.symmetric_mixture(m12, m21)
            lhs = ex.conditional(mix, t, given)
            marg = ex.prob(mix, t)
            singles = [check_bicolor(box, bc, params, [zs], [zh], 1, 2, measure=m) for bc, m in ((b12, m12), (b21, m21))]
            chain = {
                "conditional": lhs,
                "mixture_marginal": marg,
                "pure_average": 0.5 * (ex.prob(m12, t) + ex.prob(m21, t)),
                "single_bc_slacks": [r.slack for r in singles],
                "single_bc_hold": all(not r.violated for r in singles),
            }
            return WitnessReport("potts-mixture", inst, lhs, marg, float("nan"), "exact", 0.0,
                                 exact_tolerance(params.q**min(box.n_sites, 24)), chain)
    r, se, marg, marg_se, parts = _mc_mixture_conditional(box, params, (b12, b21), t, given, n_sweeps, n_chains,
                                                          seed, sampler, threads)
    chain = {"conditional": r, "mixture_marginal": marg, "seed": seed, "n_sweeps": n_sweeps}
    return WitnessReport("potts-mixture", inst, r, marg, float("nan"), "mc", float(np.hypot(se, marg_se)), 0.0, chain)


def witness_beta_search(box: Box, betas, z: int = 1, margin: float = 0.0, bisect_steps: int = 20,
                        potts_q: int | None = None) -> dict:
    """First grid ``beta`` where the exact witness holds, refined by bisection."""
    def ok(beta):
        if potts_q:
            rep = potts_dobrushin_witness(box, ModelParams(potts_q, beta), z, method="exact")
        else:
            rep = mixture_conditional_witness(box, ModelParams(2, beta), z, method="exact")
        return rep.lhs - rep.fkg_bound > margin, rep

    prev = None
    for beta in betas:
        good, rep = ok(beta)
        if good:
            lo, hi = (prev, beta)
            if lo is not None:
                for _ in range(bisect_steps):
                    mid = 0.5 * (lo + hi)
                    if ok(mid)[0]:
                        hi = mid
                    else:
                        lo = mid
            return {"first_grid_beta": beta, "threshold": hi, "report": rep.to_dict()}
        prev = beta
    return {"first_grid_beta": None, "threshold": None, "report": None}


# ---------------------------------------------------------------------------
# interfaces


@dataclass
class MagnetizationProfile:
    heights: list
    mean: list
    stderr: list
    meta: dict = field(default_factory=dict)
    halves: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class InterfaceHeightField:
    columns: list
    mean: list
    variance: list
    variance_stderr: list
    central_variance: float
    central_variance_stderr: float

    def to_dict(self) -> dict:
        return asdict(self)


def _ising(s):
    return np.where(s == PLUS, 1.0, -1.0)


def column_heights(box: Box, spins: np.ndarray) -> np.ndarray:
    """``h = #{z >= 0: minus} - #{z < 0: plus}`` per column, shape ``(N, n_columns)``."""
    shape = box.shape
    zs = np.arange(box.ranges[-1][0], box.ranges[-1][1] + 1)
    s = np.asarray(spins).reshape(len(spins), -1, shape[-1])
    upper = (zs >= 0)
    return np.sum((s == MINUS) & upper, axis=2) - np.sum((s == PLUS) & ~upper, axis=2)


def _variance_from(e1: Estimate, e2: Estimate) -> tuple[float, float]:
    var = e2.mean - e1.mean**2
    lin = e2.batch_means - 2 * e1.mean * e1.batch_means
    se = float(np.std(lin, ddof=1) / np.sqrt(len(lin))) if len(lin) > 1 else 0.0
    return float(var), se


def ground_state(box: Box) -> np.ndarray:
    """Dobrushin ground state: plus on ``z >= 0``, minus below."""
    return np.where(box.sites[:, -1] >= 0, PLUS, MINUS).astype(np.uint8)


def interface_profile(box: Box, bc: BoundaryCondition, params: ModelParams, seed: int = 0, n_sweeps: int = 5000,
                      n_chains: int = 2, sampler: str = "heat-bath", threads=None, burn_in=None,
                      columns: str = "central", time_series=None, init="random"):
    """Layer magnetization profile along the last axis plus the column height field.

    For a one-step condition (``bc.kind == "one-step"``) the profile is also
    split into the half-spaces ``x < 0`` and ``x >= 0``.  ``columns="all"``
    estimates every column's height variance, otherwise only the central one.
    ``init="ground"`` starts every chain from :func:`ground_state`.
    """
    if params.q != 2:
        raise ValueError("profiles are defined for the Ising case")
    shape = box.shape
    zs = list(range(box.ranges[-1][0], box.ranges[-1][1] + 1))
    n_col = box.n_sites // shape[-1]
    obs = {}
    for k, z in enumerate(zs):
        obs[f"layer{z}"] = lambda s, k=k: _ising(s.reshape(len(s), -1, shape[-1])[:, :, k]).mean(axis=1)
    xs = box.sites.reshape(-1, shape[-1], box.d)[:, 0, 0]
    if bc.kind == "one-step":
        for name, sel in (("left", xs < 0), ("right", xs >= 0)):
            for k, z in enumerate(zs):
                obs[f"{name}{z}"] = lambda s, k=k, sel=sel: _ising(s.reshape(len(s), -1, shape[-1])[:, sel, k]).mean(axis=1)
    centre = tuple(0 for _ in range(box.d - 1))
    col_sites = [tuple(c) for c in box.sites.reshape(-1, shape[-1], box.d)[:, 0, :-1]]
    centre_col = col_sites.index(centre) if centre in col_sites else n_col // 2
    cols = range(n_col) if columns == "all" else [centre_col]
    for c in cols:
        obs[f"h{c}"] = lambda s, c=c: column_heights(box, s)[:, c].astype(float)
        obs[f"hh{c}"] = lambda s, c=c: column_heights(box, s)[:, c].astype(float) ** 2
    if isinstance(init, str) and init == "ground":
        init = ground_state(box)
    est = run_experiment(sampler, box, bc, params, obs, n_sweeps, n_chains, seed, burn_in=burn_in, init=init,
                         threads=threads, batches_csv=time_series)
    by = {e.name: e for e in est}
    meta = {"box": box.to_dict(), "bc": bc.kind, "beta": params.beta, "seed": seed, "n_sweeps": n_sweeps,
            "sampler": sampler, "tau_int_max": max(e.tau_int for e in est)}
    prof = MagnetizationProfile(zs, [by[f"layer{z}"].mean for z in zs], [by[f"layer{z}"].stderr for z in zs], meta)
    if bc.kind == "one-step":
        for name in ("left", "right"):
            prof.halves[name] = {"mean": [by[f"{name}{z}"].mean for z in zs],
                                 "stderr": [by[f"{name}{z}"].stderr for z in zs]}
    means, vars_, ses = [], [], []
    for c in cols:
        v, se = _variance_from(by[f"h{c}"], by[f"hh{c}"])
        means.append(by[f"h{c}"].mean)
        vars_.append(v)
        ses.append(se)
    k = list(cols).index(centre_col)
    field_ = InterfaceHeightField([list(col_sites[c]) for c in cols], means, vars_, ses, vars_[k], ses[k])
    return prof, field_


def localization_scan(d: int, beta: float, sizes, seed: int = 0, n_sweeps: int = 5000, n_chains: int = 2,
                      sampler: str = "swendsen-wang", threads=None, init="ground") -> list[dict]:
    """Central-column height variance under the Dobrushin condition, per box size.

    Chains start from the ground state: at low temperature in d = 3 a random
    start freezes into long-lived shifted interfaces.
    """
    if d not in (2, 3):
        raise ValueError("localization scans are for d = 2 or 3")
    rows = []
    for n in sizes:
        box = centered_box(*([n] * d))
        bc = dobrushin_bc(box)
        _, fld = interface_profile(box, bc, ModelParams(2, beta), seed, n_sweeps, n_chains, sampler, threads,
                                   init=init)
        rows.append({"d": d, "n": n, "beta": beta, "variance": fld.central_variance,
                     "stderr": fld.central_variance_stderr})
    return rows


def write_rows_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


# ---------------------------------------------------------------------------
# quadrant counter-example


def quadrant_instances(q: int = 4, sizes=(4, 6), colors=None, norm=None):
    """(corr-ab) candidates with sites from the Steiner symmetric-difference regions."""
    from .inequalities import Instance
    from .lattice import make_box, quadrant_bc
    from .steiner import counterexample_sites

    colors = tuple(colors) if colors is not None else ((1, 2, 3, 4) if q >= 4 else (1, 2, 3, 2))
    out = []
    for L in sizes:
        box = make_box(2, [(0, L - 1), (0, L - 1)])
        sites = counterexample_sites(box, norm, colors[0], colors[2])
        if sites is None:
            continue
        x, y = sites
        out.append(Instance(box, quadrant_bc(box, colors), q, [x], [y], colors[0], colors[2], f"quadrant L={L}"))
    return out


def quadrant_search(q: int = 4, sizes=(24,), betas=(1.0, 1.2, 1.4, 1.6, 1.8, 2.0), n_sweeps: int = 40000,
                    n_chains: int = 8, seed: int = 0, sampler: str = "swendsen-wang", threads=None, budget: int = 200,
                    colors=None) -> list:
    """Grid search for a (corr-ab) violation under the quadrant condition.

    Boxes within the exact caps are decided exactly (transfer matrix); larger
    ones by Monte Carlo at four standard errors.
    """
    from .inequalities import mc_corr_ab, search_violation

    def mc(ident, inst, beta):
        return mc_corr_ab(inst.box, inst.bc, ModelParams(inst.q, beta), inst.A, inst.B, inst.i, inst.j, n_sweeps,
                          n_chains, seed, sampler, threads)

    return search_violation("corr-ab", quadrant_instances(q, sizes, colors), betas, budget=budget, mc=mc)
