import numpy as np
import pytest

from gibbslab.events import site_is
from gibbslab.exact import enumerate_measure, prob
from gibbslab.lattice import ModelParams, centered_box, dobrushin_bc, free_bc, make_box, pure_bc, quadrant_bc
from gibbslab.samplers import (
    SAMPLERS, Estimate, RNGConfigError, batch_layout, chain_generators, energy_observable, heat_bath_sweep,
    integrated_autocorr_time, mixture_ratio, new_chain, ratio_estimate, run_experiment, swendsen_wang_sweep,
    wolff_step,
)


def test_chain_generators_are_reproducible_and_distinct():
    a = [g.random(4) for g in chain_generators(7, 3)]
    b = [g.random(4) for g in chain_generators(7, 3)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(a[0], a[1])
    # stream k does not depend on how many streams were requested
    assert np.array_equal(chain_generators(7, 5)[2].random(4), a[2])


@pytest.mark.parametrize("seed,n", [(-1, 1), (True, 1), (1.5, 1), (0, 0)])
def test_bad_rng_config(seed, n):
    with pytest.raises(RNGConfigError):
        chain_generators(seed, n)


def test_new_chain_init():
    box = centered_box(3, 3)
    st = new_chain(box, 3, seed=1)
    assert st.spins.min() >= 1 and st.spins.max() <= 3
    st = new_chain(box, 3, init=np.full(9, 2))
    assert np.all(st.spins == 2)
    with pytest.raises(ValueError):
        new_chain(box, 3, init=np.ones(4))


@pytest.mark.parametrize("kind", SAMPLERS)
def test_samplers_keep_spins_in_range(kind):
    box = centered_box(4, 4)
    params = ModelParams(3, 1.2)
    bc = quadrant_bc(box, (1, 2, 3, 2))
    st = new_chain(box, 3, seed=3)
    step = {"heat-bath": heat_bath_sweep, "swendsen-wang": swendsen_wang_sweep, "wolff": wolff_step}[kind]
    step(st, box, bc, params, 20)
    assert st.spins.min() >= 1 and st.spins.max() <= 3


def test_zero_temperature_limit_freezes_to_boundary():
    box = centered_box(3, 3)
    params = ModelParams(2, 12.0)
    for kind in ("heat-bath", "swendsen-wang"):
        st = new_chain(box, 2, seed=0)
        step = heat_bath_sweep if kind == "heat-bath" else swendsen_wang_sweep
        step(st, box, pure_bc(box, 2), params, 50)
        assert np.all(st.spins == 2)


@pytest.mark.parametrize("kind", SAMPLERS)
def test_samplers_match_exact_marginals(kind):
    box = make_box(2, [(0, 1), (0, 1)])
    params = ModelParams(3, 0.9)
    bc = quadrant_bc(box, (1, 2, 3, 2))
    mu = enumerate_measure(box, bc, params)
    events = {f"s{k}": site_is(box, tuple(box.sites[k]), 2) for k in range(4)}
    ests = run_experiment(kind, box, bc, params, events, n_sweeps=40000, n_chains=2, seed=11, burn_in=200)
    for e in ests:
        exact = prob(mu, events[e.name])
        assert abs(e.mean - exact) < 4 * e.stderr + 1e-3, (e.name, e.mean, exact, e.stderr)


def test_results_do_not_depend_on_thread_count():
    box = centered_box(4, 4)
    params = ModelParams(2, 0.8)
    bc = dobrushin_bc(box)
    obs = {"e": energy_observable(box, bc, 2)}
    a = run_experiment("swendsen-wang", box, bc, params, obs, 500, n_chains=3, seed=5, burn_in=50, threads=1)
    b = run_experiment("swendsen-wang", box, bc, params, obs, 500, n_chains=3, seed=5, burn_in=50, threads=3)
    assert a[0].mean == b[0].mean and np.array_equal(a[0].batch_means, b[0].batch_means)


def test_pilot_burn_in_and_batches_csv(tmp_path):
    box = centered_box(3, 3)
    bc = free_bc(box)
    params = ModelParams(2, 0.3)
    path = tmp_path / "b.csv"
    (e,) = run_experiment("heat-bath", box, bc, params, {"x": site_is(box, (0, 0), 1)}, 400, seed=1,
                          batches_csv=path)
    n_b, size = batch_layout(400)
    assert (n_b, size) == (20, 20)
    assert len(e.batch_means) == 20 and e.n_samples == 400
    assert len(path.read_text().splitlines()) == 21


def test_run_experiment_validation():
    box = centered_box(2, 2)
    with pytest.raises(ValueError):
        run_experiment("metropolis", box, free_bc(box), ModelParams(2, 1.0), {}, 10)
    with pytest.raises(ValueError):
        run_experiment("wolff", box, free_bc(box), ModelParams(2, 1.0), {}, 0)


def test_autocorrelation_of_ar1():
    rng = np.random.default_rng(0)
    rho, n = 0.8, 200000
    x = np.empty(n)
    x[0] = 0
    noise = rng.normal(size=n)
    for t in range(1, n):
        x[t] = rho * x[t - 1] + noise[t]
    expected = 0.5 * (1 + rho) / (1 - rho)
    assert integrated_autocorr_time(x) == pytest.approx(expected, rel=0.1)
    assert integrated_autocorr_time(rng.normal(size=5000)) == pytest.approx(0.5, abs=0.1)
    assert integrated_autocorr_time(np.ones(100)) == 0.5


def _est(name, batches):
    b = np.asarray(batches, dtype=float)
    return Estimate(name, float(b.mean()), float(b.std(ddof=1) / np.sqrt(len(b))), len(b), 0, batch_means=b)


def test_ratio_delta_method():
    rng = np.random.default_rng(4)
    den = 0.5 + 0.05 * rng.normal(size=400)
    num = 0.4 * den + 0.01 * rng.normal(size=400)
    r, se = ratio_estimate(_est("a", num), _est("b", den))
    assert r == pytest.approx(num.mean() / den.mean())
    assert 0 < se < 0.01
    # two identical halves weighted 1/2 give the same ratio
    r2, _ = mixture_ratio([(0.5, _est("a", num), _est("b", den))] * 2)
    assert r2 == pytest.approx(r)
    with pytest.raises(ZeroDivisionError):
        ratio_estimate(_est("a", num), _est("b", np.zeros(400)))


def test_estimate_between_chain_stderr():
    e = Estimate("x", 0.0, 0.1, 10, 0, chain_means=np.array([1.0, -1.0]))
    assert e.between_chain_stderr == pytest.approx(1.0)
    assert e.conservative_stderr == pytest.approx(1.0)
    assert np.isnan(Estimate("x", 0.0, 0.1, 10, 0).between_chain_stderr)
    assert set(e.to_dict()) >= {"mean", "stderr", "tau_int", "seed", "n_chains"}
