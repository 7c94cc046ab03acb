"""Command-line front end: ``gibbslab {exact, sample, check}``.

Exit codes: 0 success or expected outcome, 1 a theorem-backed inequality was
violated, 2 configuration error (including oracle cap breaches), 3 runtime
error (including RNG stream misconfiguration).
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import exact as ex
from . import experiments as xp
from . import inequalities as iq
from .lattice import (SCHEMA_VERSION, Box, DomainError, ModelParams, bc_from_dict, centered_box, dobrushin_bc,
                      free_bc, one_step_bc, pure_bc, quadrant_bc, shifted_dobrushin_bc)
from .samplers import (SAMPLERS, RNGConfigError, _advance, _Tables, energy_observable, new_chain, run_experiment,
                       write_batches_csv)

PINNED_BOX = "x".join(str(k) for k in xp.PINNED_WITNESS["box"])


class ConfigError(ValueError):
    pass


CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "box": {"oneOf": [{"type": "string"}, {"type": "object", "required": ["ranges"]}]},
        "bc": {"oneOf": [{"type": "string"}, {"type": "object", "required": ["kind"]}]},
        "q": {"type": "integer", "minimum": 1},
        "beta": {"type": "number", "minimum": 0},
        "sampler": {"enum": list(SAMPLERS)},
        "n_sweeps": {"type": "integer", "minimum": 1},
        "n_chains": {"type": "integer", "minimum": 1},
        "burn_in": {"type": ["integer", "null"], "minimum": 0},
        "seed": {"type": "integer"},
        "observables": {"type": "array", "items": {"enum": ["sites", "layers", "height", "energy"]}},
        "out": {"type": "string"},
        "cap": {"type": "integer", "minimum": 1},
        "method": {"enum": ["auto", "enumerate", "transfer"]},
    },
    "additionalProperties": False,
}

BC_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"enum": ["free", "pure", "dobrushin", "one-step", "shifted-dobrushin", "quadrant", "explicit"]},
        "box": {"type": "object", "required": ["ranges"]},
        "params": {"type": "object"},
        "sites": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2}},
    },
}


# ---------------------------------------------------------------------------
# parsing


def parse_box(spec) -> Box:
    if isinstance(spec, dict):
        return Box.from_dict(spec)
    m = re.fullmatch(r"(\d+(?:x\d+)*)", str(spec).strip())
    if not m:
        raise ConfigError(f"box spec {spec!r} is not of the form 3x3 or 2x2x6")
    return centered_box(*[int(s) for s in m.group(1).split("x")])


def parse_subbox(spec: str, box: Box) -> Box:
    m = re.fullmatch(r"center(\d+(?:x\d+)*)", spec)
    if not m:
        raise ConfigError(f"subbox spec {spec!r} is not of the form center1x1")
    sub = centered_box(*[int(s) for s in m.group(1).split("x")])
    if sub.d != box.d or not all(box.contains(s) for s in sub.sites):
        raise ConfigError(f"subbox {spec} does not fit inside {box}")
    return sub


def _colors(text: str) -> tuple[int, ...]:
    return tuple(int(c) for c in text.split(","))


def parse_bc(spec, box: Box):
    """``free``, ``pure:C``, ``dobrushin[:A,B]``, ``one-step[:A,B]``, ``shifted:K``,
    ``quadrant[:a,b,c,d]``, a JSON object, or a path to a JSON file."""
    if isinstance(spec, dict):
        return _bc_from_json_obj(spec, box)
    spec = str(spec)
    if spec.endswith(".json") or os.path.sep in spec:
        try:
            data = json.loads(Path(spec).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read boundary file {spec}: {exc}") from None
        return _bc_from_json_obj(data, box)
    name, _, arg = spec.partition(":")
    try:
        if name == "free":
            return free_bc(box)
        if name == "pure":
            return pure_bc(box, int(arg or 1))
        if name == "dobrushin":
            return dobrushin_bc(box, colors=_colors(arg) if arg else (2, 1))
        if name == "one-step":
            return one_step_bc(box, _colors(arg) if arg else (2, 1))
        if name == "shifted":
            return shifted_dobrushin_bc(box, int(arg))
        if name == "quadrant":
            return quadrant_bc(box, _colors(arg) if arg else (1, 2, 3, 4))
    except (ValueError, DomainError) as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown boundary condition {spec!r}")


def _bc_from_json_obj(data, box: Box):
    try:
        jsonschema.validate(data, BC_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"boundary schema error: {exc.message}") from None
    try:
        return bc_from_dict(data, None if "box" in data else box)
    except (KeyError, ValueError, DomainError) as exc:
        raise ConfigError(f"invalid boundary condition: {exc}") from None


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema error: {exc.message}") from None
    return data


def resolve(args, keys, defaults) -> dict:
    """Flags override the config file, which overrides the defaults."""
    cfg = dict(defaults)
    cfg.update(load_config(getattr(args, "config", None)))
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def out_dir(cfg) -> Path:
    p = Path(cfg.get("out") or os.environ.get("GIBBSLAB_OUT") or "gibbslab-out")
    p.mkdir(parents=True, exist_ok=True)
    return p


def thread_count(args) -> int:
    if getattr(args, "threads", None):
        return int(args.threads)
    env = os.environ.get("GIBBSLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"GIBBSLAB_THREADS={env!r} is not an integer") from None
    return os.cpu_count() or 1


def _dump(data, path) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=xp._json_default)
        fh.write("\n")


def _public(cfg) -> dict:
    return {k: v for k, v in cfg.items() if k != "config"}


# ---------------------------------------------------------------------------
# commands


def cmd_exact(args) -> int:
    cfg = resolve(args, ["box", "bc", "q", "beta", "out", "cap", "method"],
                  {"bc": "free", "q": 2, "beta": 1.0, "cap": ex.DEFAULT_CAP, "method": "auto"})
    if "box" not in cfg:
        raise ConfigError("a box is required")
    box = parse_box(cfg["box"])
    bc = parse_bc(cfg["bc"], box)
    params = ModelParams(int(cfg["q"]), float(cfg["beta"]))
    measure = ex.exact_measure(box, bc, params, int(cfg["cap"]), cfg["method"])
    out = out_dir(cfg)
    rows = ex.marginal_rows(measure)
    ex.write_csv(rows, out / "marginals.csv")
    summary = {"config": _public(cfg), **ex.summary(measure)}
    if args.dlr_check:
        sub = parse_subbox(args.subbox or "center" + "x".join(["1"] * box.d), box)
        summary["dlr_max_tv"] = ex.dlr_check(box, bc, params, sub, int(cfg["cap"]))
        summary["dlr_subbox"] = sub.to_dict()
    _dump(summary, out / "exact.json")
    print(f"logZ = {measure.log_z!r}")
    if "dlr_max_tv" in summary:
        print(f"DLR max TV = {summary['dlr_max_tv']:.3e}")
    print(f"wrote {out / 'marginals.csv'} and {out / 'exact.json'}")
    return 0


def _observables(names, box, q):
    from .experiments import column_heights
    from .lattice import PLUS

    obs = {}
    shape = box.shape
    for name in names:
        if name == "sites":
            if box.n_sites * q > 4096:
                raise ConfigError("site marginals are limited to n_sites * q <= 4096")
            for i, s in enumerate(box.sites):
                for c in range(1, q + 1):
                    obs[f"P[{','.join(map(str, s))}]={c}"] = lambda x, i=i, c=c: (x[:, i] == c).astype(float)
        elif name == "layers":
            for k, z in enumerate(range(box.ranges[-1][0], box.ranges[-1][1] + 1)):
                obs[f"layer{z}"] = lambda x, k=k: np.where(x.reshape(len(x), -1, shape[-1])[:, :, k] == PLUS, 1.0,
                                                           -1.0).mean(axis=1)
        elif name == "height":
            c = (box.n_sites // shape[-1]) // 2
            obs["h_centre"] = lambda x, c=c: column_heights(box, x)[:, c].astype(float)
            obs["h2_centre"] = lambda x, c=c: column_heights(box, x)[:, c].astype(float) ** 2
        elif name == "energy":
            obs["agreements"] = None  # needs the bc; filled in by cmd_sample
        else:
            raise ConfigError(f"unknown observable {name!r}")
    return obs


def cmd_sample(args) -> int:
    cfg = resolve(args, ["box", "bc", "q", "beta", "sampler", "n_sweeps", "n_chains", "seed", "burn_in", "out",
                         "observables"],
                  {"bc": "free", "q": 2, "beta": 1.0, "sampler": "swendsen-wang", "n_sweeps": 10000, "n_chains": 2,
                   "seed": 0, "burn_in": None, "observables": ["sites"]})
    if "box" not in cfg:
        raise ConfigError("a box is required")
    if isinstance(cfg["observables"], str):
        cfg["observables"] = cfg["observables"].split(",")
    box = parse_box(cfg["box"])
    bc = parse_bc(cfg["bc"], box)
    params = ModelParams(int(cfg["q"]), float(cfg["beta"]))
    if cfg["sampler"] not in SAMPLERS:
        raise ConfigError(f"unknown sampler {cfg['sampler']!r}")
    obs = _observables(cfg["observables"], box, params.q)
    if "agreements" in obs:
        obs["agreements"] = energy_observable(box, bc, params.q)
    out = out_dir(cfg)
    est = run_experiment(cfg["sampler"], box, bc, params, obs, int(cfg["n_sweeps"]), int(cfg["n_chains"]),
                         cfg["seed"], cfg["burn_in"], threads=thread_count(args))
    rows = [{"name": e.name, "mean": e.mean, "stderr": e.stderr, "between_chain_stderr": e.between_chain_stderr,
             "n_samples": e.n_samples, "tau_int": e.tau_int} for e in est]
    ex.write_csv(rows, out / "estimates.csv")
    _dump({"config": _public(cfg), "estimates": [e.to_dict() for e in est]}, out / "estimates.json")
    if "layers" in cfg["observables"]:
        prof = [{"z": int(r["name"][5:]), "mean": r["mean"], "stderr": r["stderr"]} for r in rows
                if r["name"].startswith("layer")]
        ex.write_csv(prof, out / "profile.csv")
    if args.batches:
        write_batches_csv(est, out / "batches.csv")
    if args.snapshot:
        from .svg import lattice_svg, write_svg
        state = new_chain(box, params.q, seed=cfg["seed"], stream=0)
        _advance(cfg["sampler"], _Tables(box, bc, params), state, args.snapshot_sweeps, False)
        write_svg(lattice_svg(box, state.spins, bc), out / "snapshot.svg")
    print(f"wrote {len(est)} estimates to {out / 'estimates.csv'}")
    return 0


def _report_exit(reports, theorem: bool) -> int:
    print(iq.format_table(reports) if reports else "no instances")
    bad = [r for r in reports if r.violated]
    if theorem and bad:
        print(f"{len(bad)} violation(s) of a theorem-backed inequality", file=sys.stderr)
        return 1
    return 0


def _maybe_jsonl(args, reports) -> None:
    if args.out or os.environ.get("GIBBSLAB_OUT"):
        iq.write_jsonl(reports, out_dir({"out": args.out}) / f"{args.id}.jsonl")


def _instance_file(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read instance {path}: {exc}") from None
    for key in ("box", "q", "beta"):
        if key not in data:
            raise ConfigError(f"instance file lacks {key!r}")
    box = parse_box(data["box"])
    bc = parse_bc(data.get("bc", "free"), box)
    return box, bc, ModelParams(int(data["q"]), float(data["beta"])), data


def cmd_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    ident = args.id
    reports = []
    if ident == "fkg":
        if args.box:
            box = parse_box(args.box)
            bcs = [(box, parse_bc(args.bc or "free", box), ModelParams(2, args.beta if args.beta is not None else 1.0))]
        else:
            bcs = [iq.random_ising_instance(rng) for _ in range(args.random or 20)]
        for box, bc, params in bcs:
            res = iq.exhaustive_fkg(ex.enumerate_measure(box, bc, params))
            reports.append(iq.InequalityReport("fkg", {"box": box.to_dict(), "bc": bc.to_dict(), "beta": params.beta,
                                                       "pairs": res.n_pairs, "worst": res.worst},
                                               0.0, res.min_slack))
        _maybe_jsonl(args, reports)
        return _report_exit(reports, theorem=True)
    if ident in ("fkg-mixture", "potts-mixture", "majority"):
        box = parse_box(args.box or PINNED_BOX)
        beta = args.beta if args.beta is not None else xp.PINNED_WITNESS["beta"]
        if ident == "fkg-mixture":
            rep = xp.mixture_conditional_witness(box, ModelParams(2, beta), args.z, args.seed)
        elif ident == "potts-mixture":
            rep = xp.potts_dobrushin_witness(box, ModelParams(args.q or 3, beta), args.z, args.seed)
        else:
            rep = xp.majority_witness(box, ModelParams(2, beta), args.z, args.m, args.seed,
                                      n_sweeps=args.sweeps, threads=thread_count(args))
        print(f"{ident}: conditional = {rep.lhs:.12g}  ceiling = {rep.fkg_bound:.12g}  method = {rep.method}  "
              f"verdict = {rep.verdict}")
        if args.out or os.environ.get("GIBBSLAB_OUT"):
            _dump(rep.to_dict(), out_dir({"out": args.out}) / f"{ident}.json")
        return 0
    if ident in ("corr-ab", "corr-aa", "bicolor"):
        if args.instance:
            box, bc, params, data = _instance_file(args.instance)
            A, B = data.get("A", []), data.get("B", [])
            i, j = int(data.get("i", 1)), int(data.get("j", 2))
            insts = [(box, bc, params, A, B, i, j)]
            theorem = ident == "bicolor" or bc.kind == "free"
        else:
            kind = {"bicolor": "bicolor"}.get(ident, args.bc or "free")
            if kind not in ("free", "bicolor", "random"):
                raise ConfigError("random families are free, bicolor or random")
            insts = [iq.random_potts_instance(rng, kind) for _ in range(args.random or 200)]
            theorem = kind in ("free", "bicolor")
        for box, bc, params, A, B, i, j in insts:
            try:
                if ident == "corr-ab":
                    reports.append(iq.check_schonmann_ab(box, bc, params, A, B, i, j))
                elif ident == "corr-aa":
                    reports.append(iq.check_schonmann_aa(box, bc, params, A, B, i))
                else:
                    reports.append(iq.check_bicolor(box, bc, params, A, B, i, j))
            except ex.NullEventError:
                continue
        _maybe_jsonl(args, reports)
        return _report_exit(reports, theorem)
    if ident == "vdberg":
        for _ in range(args.random or 500):
            graph, q, S, T, f, g = iq.random_vdberg_instance(rng)
            try:
                reports.append(iq.check_vdberg(graph, q, None, S, T, f, g))
            except ex.NullEventError:
                continue
        _maybe_jsonl(args, reports)
        return _report_exit(reports, theorem=True)
    if ident == "corr-ab-search":
        q = args.q or 4
        exact_sizes = [int(s) for s in args.exact_sizes.split(",") if s]
        reports = iq.search_violation("corr-ab", xp.quadrant_instances(q, exact_sizes), budget=100)
        if args.mc_size:
            reports += xp.quadrant_search(q, (args.mc_size,), n_sweeps=args.sweeps, seed=args.seed,
                                          threads=thread_count(args))
        _maybe_jsonl(args, reports)
        print(iq.format_table(reports) if reports else "not found within budget")
        return 0
    raise ConfigError(f"unknown inequality id {ident!r}")


CHECK_IDS = ("fkg", "fkg-mixture", "potts-mixture", "majority", "corr-ab", "corr-aa", "bicolor", "vdberg",
             "corr-ab-search")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gibbslab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("exact", help="exact tables, logZ and DLR checks")
    e.add_argument("--config")
    e.add_argument("--box")
    e.add_argument("--bc")
    e.add_argument("--q", type=int)
    e.add_argument("--beta", type=float)
    e.add_argument("--cap", type=int)
    e.add_argument("--method", choices=["auto", "enumerate", "transfer"])
    e.add_argument("--dlr-check", action="store_true")
    e.add_argument("--subbox")
    e.add_argument("--out")
    e.set_defaults(func=cmd_exact)

    s = sub.add_parser("sample", help="Monte Carlo estimates")
    s.add_argument("--config")
    s.add_argument("--box")
    s.add_argument("--bc")
    s.add_argument("--q", type=int)
    s.add_argument("--beta", type=float)
    s.add_argument("--sampler", choices=SAMPLERS)
    s.add_argument("--sweeps", dest="n_sweeps", type=int)
    s.add_argument("--chains", dest="n_chains", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--burn-in", dest="burn_in", type=int)
    s.add_argument("--observables")
    s.add_argument("--batches", action="store_true", help="also write per-batch means")
    s.add_argument("--snapshot", action="store_true", help="write an SVG snapshot")
    s.add_argument("--snapshot-sweeps", type=int, default=1000)
    s.add_argument("--threads", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    c = sub.add_parser("check", help="inequality checks and searches")
    c.add_argument("id", choices=CHECK_IDS)
    c.add_argument("--box")
    c.add_argument("--bc")
    c.add_argument("--q", type=int)
    c.add_argument("--beta", type=float)
    c.add_argument("--z", type=int, default=1)
    c.add_argument("--m", type=int, default=1)
    c.add_argument("--random", type=int)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--instance")
    c.add_argument("--sweeps", type=int, default=40000)
    c.add_argument("--mc-size", type=int)
    c.add_argument("--exact-sizes", default="4,6")
    c.add_argument("--threads", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)
    return p


def _error(kind: str, msg: str) -> None:
    print(json.dumps({"error": kind, "message": msg}), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ex.CapExceeded as exc:
        _error("cap_exceeded", str(exc))
        return 2
    except (ConfigError, DomainError, jsonschema.ValidationError) as exc:
        _error("config", str(exc))
        return 2
    except RNGConfigError as exc:
        _error("rng", str(exc))
        return 3
    except Exception as exc:  # noqa: BLE001
        _error("runtime", f"{type(exc).__name__}: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
