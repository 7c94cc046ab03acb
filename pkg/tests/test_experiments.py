import json

import numpy as np
import pytest

from gibbslab.experiments import (
    PINNED_POTTS, PINNED_WITNESS, alpha_mixture_condition, alpha_mixture_ratio, check_symmetric, column_heights,
    dobrushin_pair, interface_profile, majority_witness, mirror, mixture_conditional_witness,
    potts_dobrushin_witness, quadrant_instances, witness_beta_search, write_report,
)
from gibbslab.exact import exact_measure
from gibbslab.inequalities import check_schonmann_ab, search_violation
from gibbslab.lattice import MINUS, PLUS, DomainError, ModelParams, centered_box, dobrushin_bc, make_box, one_step_bc


def test_symmetry_helpers():
    assert check_symmetric(centered_box(2, 2, 6)) == 3
    with pytest.raises(DomainError):
        check_symmetric(make_box(2, [(0, 1), (0, 3)]))
    assert mirror((1, 0, 2)) == (1, 0, -3)
    bp, bm = dobrushin_pair(centered_box(2, 4))
    assert np.all(bp.values + bm.values == PLUS + MINUS)


def test_alpha_mixture_formula():
    # alpha = 1 reduces to 2 m2 / (1 + m3)
    assert alpha_mixture_ratio(1.0, 0.4, 0.95) == pytest.approx(0.8 / 1.95)
    assert not alpha_mixture_condition(1.0, 0.4, 0.95)
    assert alpha_mixture_ratio(1.0, 0.2, 0.95) == pytest.approx(0.4 / 1.95)
    assert alpha_mixture_condition(1.0, 0.9, 0.95)
    # smaller alpha weights the wrong interface more and lowers the ratio
    assert alpha_mixture_ratio(0.5, 0.9, 0.95) < alpha_mixture_ratio(1.0, 0.9, 0.95)
    for bad in ((0.0, 0.5, 0.6), (1.5, 0.5, 0.6), (1.0, 0.7, 0.6)):
        with pytest.raises(ValueError):
            alpha_mixture_ratio(*bad)


def test_pinned_ising_witness_chain():
    box = centered_box(*PINNED_WITNESS["box"])
    rep = mixture_conditional_witness(box, ModelParams(2, PINNED_WITNESS["beta"]), PINNED_WITNESS["z"])
    c = rep.chain
    assert rep.method == "exact" and rep.verdict == "witness"
    assert rep.lhs > 0.5
    assert c["mixture_z_plus"] == pytest.approx(0.5, abs=1e-12)
    assert c["step_mixture_ge_half_pm"] and c["step_conditional_ge_pm_joint"]
    assert c["step_union_bound"] and c["step_equality"]
    assert c["pm_magnetization_hat"] == pytest.approx(-c["pm_magnetization"], abs=1e-12)


def test_mc_witness_agrees_with_exact():
    box = centered_box(2, 2, 4)
    p = ModelParams(2, 1.0)
    exact = mixture_conditional_witness(box, p)
    mc = mixture_conditional_witness(box, p, method="mc", n_sweeps=40000, seed=3)
    assert mc.method == "mc"
    assert abs(mc.lhs - exact.lhs) < 4 * mc.stderr + 1e-3


def test_witness_input_validation():
    with pytest.raises(ValueError):
        mixture_conditional_witness(centered_box(2, 4), ModelParams(3, 1.0))
    with pytest.raises(DomainError):
        mixture_conditional_witness(centered_box(2, 4), ModelParams(2, 1.0), z=-1)
    with pytest.raises(ValueError):
        majority_witness(centered_box(3, 8), ModelParams(2, 1.0), 2, 2)
    with pytest.raises(DomainError):
        majority_witness(centered_box(3, 8), ModelParams(2, 1.0), 0, 3)


def test_majority_witness_m1_matches_single_site():
    box = centered_box(2, 2, 4)
    p = ModelParams(2, 1.2)
    a = majority_witness(box, p, 1, 1)
    b = mixture_conditional_witness(box, p, 1)
    assert a.lhs == pytest.approx(b.lhs, abs=1e-12)


def test_pinned_potts_witness():
    box = centered_box(*PINNED_POTTS["box"])
    rep = potts_dobrushin_witness(box, ModelParams(PINNED_POTTS["q"], PINNED_POTTS["beta"]), PINNED_POTTS["z"])
    assert rep.verdict == "witness"
    assert rep.chain["single_bc_hold"]
    assert rep.lhs > rep.fkg_bound + 0.1


def test_witness_beta_search_first_grid_point():
    res = witness_beta_search(centered_box(2, 2, 4), [0.05, 0.5])
    assert res["first_grid_beta"] == 0.05 and res["threshold"] == 0.05


def test_column_heights():
    box = centered_box(1, 4)
    s = np.array([[MINUS, MINUS, PLUS, PLUS], [MINUS, MINUS, MINUS, PLUS], [PLUS, MINUS, PLUS, PLUS]], np.uint8)
    assert column_heights(box, s)[:, 0].tolist() == [0, 1, -1]


def test_interface_profile_antisymmetry_and_halves():
    box = centered_box(4, 2, 4)
    p = ModelParams(2, 1.5)
    prof, fld = interface_profile(box, dobrushin_bc(box), p, seed=1, n_sweeps=3000, burn_in=200)
    m = np.array(prof.mean)
    assert m[0] < 0 < m[-1]
    assert np.all(np.abs(m + m[::-1]) < 6 * np.array(prof.stderr) + 0.05)
    assert fld.central_variance >= 0
    prof2, _ = interface_profile(box, one_step_bc(box), p, seed=1, n_sweeps=500, burn_in=100)
    assert set(prof2.halves) == {"left", "right"}
    with pytest.raises(ValueError):
        interface_profile(box, dobrushin_bc(box), ModelParams(3, 1.0))


def test_quadrant_exact_violation():
    (inst,) = quadrant_instances(4, (4,))
    rep = check_schonmann_ab(inst.box, inst.bc, ModelParams(4, 2.0), inst.A, inst.B, inst.i, inst.j)
    assert rep.violated
    found = search_violation("corr-ab", [inst], betas=[0.5, 2.0], bisect_steps=4)
    assert found and found[0].extra["grid_beta"] == 2.0 and found[0].extra["threshold_beta"] <= 2.0


def test_quadrant_three_colours():
    (inst,) = quadrant_instances(3, (4,))
    assert inst.bc.colors == [1, 2, 3]
    p = ModelParams(3, 2.0)
    mu = exact_measure(inst.box, inst.bc, p, method="transfer")
    assert check_schonmann_ab(inst.box, inst.bc, p, inst.A, inst.B, 1, 3, measure=mu).violated


def test_write_report(tmp_path):
    box = centered_box(2, 2, 4)
    rep = mixture_conditional_witness(box, ModelParams(2, 1.0))
    write_report(rep, tmp_path / "w.json")
    data = json.loads((tmp_path / "w.json").read_text())
    assert data["verdict"] == "witness"
