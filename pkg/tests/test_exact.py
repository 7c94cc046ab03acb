import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from gibbslab.events import site_is
from gibbslab.exact import (
    CapExceeded, NullEventError, TransferMeasure, conditional, dlr_check, enumerate_measure, exact_measure, prob,
    subbox_of, symmetric_mixture, total_variation,
)
from gibbslab.lattice import (
    ModelParams, all_configs, centered_box, dobrushin_bc, free_bc, gibbs_log_weight, make_box, pure_bc, quadrant_bc,
    random_bc,
)


def brute_probs(box, bc, params):
    lw = gibbs_log_weight(box, bc, params, all_configs(box.n_sites, params.q))
    w = np.exp(lw - lw.max())
    return w / w.sum()


def test_single_site_closed_forms():
    box = make_box(2, [(0, 0), (0, 0)])
    for q in (2, 3, 5):
        for beta in (0.0, 0.3, 2.0):
            p = ModelParams(q, beta)
            assert enumerate_measure(box, free_bc(box), p).log_z == pytest.approx(np.log(q), abs=1e-12)
            mu = enumerate_measure(box, pure_bc(box, 1), p)
            assert mu.log_z == pytest.approx(np.log(np.exp(4 * beta) + q - 1), abs=1e-12)


def test_free_chain_closed_form():
    box = make_box(1, [(0, 5)])
    for q in (2, 3):
        p = ModelParams(q, 0.8)
        expected = np.log(q) + 5 * np.log(np.exp(0.8) + q - 1)
        assert enumerate_measure(box, free_bc(box), p).log_z == pytest.approx(expected, abs=1e-12)


def test_enumeration_matches_brute_force():
    rng = np.random.default_rng(5)
    box = make_box(2, [(0, 2), (0, 1)])
    for q in (2, 3):
        bc = random_bc(box, q, rng)
        p = ModelParams(q, 0.9)
        assert np.allclose(enumerate_measure(box, bc, p).probs(), brute_probs(box, bc, p), atol=1e-14)


def test_chunked_enumeration_with_threads():
    box = make_box(2, [(0, 3), (0, 2)])
    bc = dobrushin_bc(box, axis=1, height=1)
    p = ModelParams(3, 0.7)
    a = enumerate_measure(box, bc, p, threads=1)
    b = enumerate_measure(box, bc, p, threads=2)
    assert a.log_z == pytest.approx(b.log_z, abs=1e-12)


def test_cap_is_enforced():
    box = make_box(2, [(0, 3), (0, 3)])
    with pytest.raises(CapExceeded):
        enumerate_measure(box, free_bc(box), ModelParams(3, 1.0), cap=3**10)
    with pytest.raises(CapExceeded):
        TransferMeasure(box, free_bc(box), ModelParams(3, 1.0), cap=10)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), q=st.integers(2, 4), beta=st.floats(0.0, 3.0))
def test_transfer_matrix_agrees_with_enumeration(seed, q, beta):
    rng = np.random.default_rng(seed)
    box = make_box(2, [(0, 1), (0, 3)]) if q == 4 else make_box(2, [(0, 2), (0, 3)])
    bc = random_bc(box, q, rng)
    p = ModelParams(q, beta)
    mu = enumerate_measure(box, bc, p)
    tm = TransferMeasure(box, bc, p, axis=1)
    assert tm.log_z == pytest.approx(mu.log_z, abs=1e-10)
    sites = [0, box.n_sites - 1]
    assert np.allclose(tm.marginal(sites), mu.marginal(sites), atol=1e-12)


def test_exact_measure_dispatch():
    box = centered_box(2, 2, 6)
    p = ModelParams(2, 0.5)
    bc = dobrushin_bc(box)
    assert isinstance(exact_measure(box, bc, p, method="transfer"), TransferMeasure)
    assert not isinstance(exact_measure(box, bc, p), TransferMeasure)
    with pytest.raises(ValueError):
        exact_measure(box, bc, p, method="magic")


def test_prob_and_conditional():
    box = make_box(2, [(0, 1), (0, 1)])
    p = ModelParams(3, 1.0)
    mu = enumerate_measure(box, quadrant_bc(box, (1, 2, 3, 2)), p)
    pr = brute_probs(box, mu.bc, p)
    configs = all_configs(4, 3)
    a, b = site_is(box, (0, 0), 3), site_is(box, (1, 1), 1)
    ma, mb = configs[:, 0] == 3, configs[:, 3] == 1
    assert prob(mu, a & b) == pytest.approx(pr[ma & mb].sum(), abs=1e-14)
    assert conditional(mu, a, b) == pytest.approx(pr[ma & mb].sum() / pr[mb].sum(), abs=1e-13)
    with pytest.raises(NullEventError):
        conditional(mu, a, a & ~a)


def test_mixture_is_average():
    box = centered_box(2, 2)
    p = ModelParams(2, 1.0)
    m1 = enumerate_measure(box, dobrushin_bc(box), p)
    m2 = enumerate_measure(box, dobrushin_bc(box, colors=(1, 2)), p)
    mix = symmetric_mixture(m1, m2)
    e = site_is(box, (0, 0), 2)
    assert prob(mix, e) == pytest.approx(0.5 * (prob(m1, e) + prob(m2, e)), abs=1e-15)
    # the swapped pair is colour-symmetric, so the mixture marginal is uniform
    assert prob(mix, e) == pytest.approx(0.5, abs=1e-14)


def test_total_variation_bounds():
    box = centered_box(2, 2)
    p = ModelParams(2, 1.0)
    a = enumerate_measure(box, pure_bc(box, 1), p)
    b = enumerate_measure(box, pure_bc(box, 2), p)
    assert total_variation(a, a) == 0.0
    assert 0 < total_variation(a, b) <= 1


def test_dlr_consistency():
    rng = np.random.default_rng(2)
    box = make_box(2, [(0, 2), (0, 2)])
    for q in (2, 3):
        bc = random_bc(box, q, rng)
        sub = subbox_of(box, (1, 1), (1, 2))
        assert dlr_check(box, bc, ModelParams(q, 1.3), sub) < 1e-12
    with pytest.raises(ValueError):
        dlr_check(box, bc, ModelParams(3, 1.0), subbox_of(box, (2, 2), (3, 3)))


def test_with_beta_reuses_density_of_states():
    box = centered_box(3, 2)
    bc = dobrushin_bc(box)
    mu = enumerate_measure(box, bc, ModelParams(3, 0.4))
    fresh = enumerate_measure(box, bc, ModelParams(3, 1.7))
    assert np.allclose(mu.with_beta(1.7).probs(), fresh.probs(), atol=1e-14)
