import json

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from gibbslab.events import site_is
from gibbslab.exact import enumerate_measure
from gibbslab.inequalities import (
    BicolorError, EmpiricalMeasure, InequalityReport, Instance, MonotoneEvent, MonotonicityError, check_bicolor,
    check_fkg, check_schonmann_aa, check_schonmann_ab, check_vdberg, decreasing, exact_tolerance, exhaustive_fkg,
    format_table, increasing, random_ising_instance, random_potts_instance, random_vdberg_instance,
    search_violation, verify_cluster_monotone, write_jsonl,
)
from gibbslab.lattice import MINUS, PLUS, ModelParams, centered_box, free_bc, make_box, pure_bc, quadrant_bc
from gibbslab.random_cluster import Graph, rc_measure


def test_report_verdicts():
    r = InequalityReport("fkg", {}, lhs=0.5, rhs=0.5 - 1e-14, tolerance=1e-12)
    assert r.verdict == "holds" and not r.violated
    r = InequalityReport("fkg", {}, lhs=0.5, rhs=0.4)
    assert r.violated and r.slack == pytest.approx(-0.1)
    assert InequalityReport("x", {}, 0.5, 0.4, "mc", stderr=0.01).verdict == "violated"
    assert InequalityReport("x", {}, 0.5, 0.49, "mc", stderr=0.01).verdict == "inconclusive"
    assert InequalityReport("x", {}, 0.5, 0.51, "mc", stderr=0.01).verdict == "holds"
    d = json.loads(r.to_json())
    assert d["verdict"] == "violated" and d["slack"] == pytest.approx(-0.1)


def test_report_output(tmp_path):
    reps = [InequalityReport("fkg", {"a": np.int64(1)}, 0.1, 0.2), InequalityReport("vdberg", {}, 0.3, 0.1)]
    write_jsonl(reps, tmp_path / "r.jsonl")
    lines = (tmp_path / "r.jsonl").read_text().splitlines()
    assert [json.loads(x)["verdict"] for x in lines] == ["holds", "violated"]
    assert "vdberg" in format_table(reps)


def test_exact_tolerance_scaling():
    assert exact_tolerance(1) == pytest.approx(1e-12)
    assert exact_tolerance(10**6) == pytest.approx(1e-9)


def test_monotone_event_verification():
    box = make_box(1, [(0, 2)])
    up = increasing(site_is(box, (0,), PLUS) | site_is(box, (2,), PLUS))
    assert up.verify(3)
    bad = increasing(site_is(box, (1,), MINUS))
    with pytest.raises(MonotonicityError):
        bad.verify(3)
    assert decreasing(site_is(box, (1,), MINUS)).verify(3)
    with pytest.raises(ValueError):
        MonotoneEvent(site_is(box, (0,), PLUS), "sideways")


def test_fkg_requires_ising():
    box = make_box(1, [(0, 1)])
    mu = enumerate_measure(box, free_bc(box), ModelParams(3, 1.0))
    with pytest.raises(ValueError):
        check_fkg(mu, increasing(site_is(box, (0,), 2)), increasing(site_is(box, (1,), 2)))


def test_fkg_is_strict_at_positive_beta():
    box = make_box(1, [(0, 1)])
    mu = enumerate_measure(box, free_bc(box), ModelParams(2, 1.0))
    f, g = increasing(site_is(box, (0,), PLUS)), increasing(site_is(box, (1,), PLUS))
    r = check_fkg(mu, f, g)
    assert r.slack > 0.05
    r = check_fkg(mu, f, decreasing(site_is(box, (1,), MINUS)))
    assert r.inequality == "fkg-mixed" and r.slack > 0.05


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_exhaustive_fkg_holds(seed):
    box, bc, params = random_ising_instance(np.random.default_rng(seed))
    res = exhaustive_fkg(enumerate_measure(box, bc, params))
    n = box.n_sites
    assert res.n_events == n + n * (n - 1)
    assert res.min_slack >= -exact_tolerance(2**n)


def test_empirical_fkg_statistic():
    box = make_box(1, [(0, 1)])
    rng = np.random.default_rng(0)
    s = rng.integers(1, 3, size=(4000, 2)).astype(np.uint8)
    s[:, 1] = s[:, 0]
    emp = EmpiricalMeasure(box, ModelParams(2, 1.0), [(1.0, s)])
    r = check_fkg(emp, increasing(site_is(box, (0,), PLUS)), increasing(site_is(box, (1,), PLUS)))
    assert r.method == "mc" and r.slack == pytest.approx(0.25, abs=0.02)
    assert r.verdict == "holds"


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_schonmann_free_bc(seed):
    box, bc, params, A, B, i, j = random_potts_instance(np.random.default_rng(seed), "free")
    assert not check_schonmann_ab(box, bc, params, A, B, i, j).violated
    assert not check_schonmann_aa(box, bc, params, A, B, i).violated


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_bicolor_boundaries(seed):
    box, bc, params, A, B, i, j = random_potts_instance(np.random.default_rng(seed), "bicolor", q=3)
    assert not check_bicolor(box, bc, params, A, B, i, j).violated


def test_bicolor_rejects_third_colour():
    box = make_box(2, [(0, 1), (0, 1)])
    with pytest.raises(BicolorError):
        check_bicolor(box, quadrant_bc(box, (1, 2, 3, 2)), ModelParams(3, 1.0), [(0, 0)], [(1, 1)], 1, 2)
    with pytest.raises(ValueError):
        check_schonmann_ab(box, free_bc(box), ModelParams(3, 1.0), [(0, 0)], [(1, 1)], 1, 1)


def test_search_finds_nothing_for_free_bc():
    box = make_box(2, [(0, 1), (0, 2)])
    inst = [Instance(box, free_bc(box), 3, [(0, 0)], [(1, 2)], 1, 2, "free")]
    assert search_violation("corr-ab", inst, betas=[0.5, 2.0]) == []


def test_search_with_synthetic_mc_backend():
    box = centered_box(20, 20)
    inst = [Instance(box, pure_bc(box, 1), 4, [(0, 0)], [(1, 1)], 1, 2, "big")]
    calls = []

    def fake(ident, i, beta):
        calls.append(beta)
        return InequalityReport(ident, {}, 0.6, 0.5 if beta > 1 else 0.7, "mc", 0.01)

    found = search_violation("corr-ab", inst, betas=[0.5, 1.5], mc=fake)
    assert len(found) == 1 and found[0].extra["grid_beta"] == 1.5 and calls == [0.5, 1.5]
    assert search_violation("corr-ab", inst, betas=[0.5, 1.5]) == []
    assert search_violation("corr-ab", inst, betas=[0.5, 1.5], mc=fake, budget=1) == []


def test_cluster_monotonicity_check():
    g = Graph(4, [(0, 1), (1, 2), (2, 3)], 0.5)
    mu = rc_measure(g, 2.0)
    v = mu.view
    cond = np.ones(len(v), dtype=bool)
    size_s = v.cluster_edges([0]).sum(axis=1).astype(float)
    verify_cluster_monotone(v, [0], [3], size_s, cond)
    with pytest.raises(MonotonicityError):
        verify_cluster_monotone(v, [0], [3], -size_s, cond)
    with pytest.raises(MonotonicityError):
        verify_cluster_monotone(v, [0], [3], np.arange(len(v), dtype=float), cond)


def test_vdberg_random_instances():
    rng = np.random.default_rng(12)
    for _ in range(20):
        graph, q, S, T, f, g = random_vdberg_instance(rng, max_edges=10)
        assert not check_vdberg(graph, q, None, S, T, f, g).violated


def test_vdberg_rejects_overlap():
    g = Graph(3, [(0, 1), (1, 2)], 0.5)
    with pytest.raises(ValueError):
        check_vdberg(g, 2.0, None, [0, 1], [1], lambda v: np.ones(len(v)), lambda v: np.ones(len(v)))
