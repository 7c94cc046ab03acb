import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from gibbslab.lattice import make_box
from gibbslab.steiner import (
    DegenerateOverlap, NormError, _check_partition, axis_weighted, bar_tree, check_norm, counterexample_sites,
    deepest_site, euclidean, face_overlap, region_centre, region_sites, steiner_tree_square,
    symmetric_difference_regions, table_norm,
)
from gibbslab.svg import lattice_svg, steiner_svg


def test_euclidean_square_tree():
    trees = steiner_tree_square()
    v, h = trees.vertical, trees.horizontal
    assert v.length == pytest.approx(1 + np.sqrt(3), abs=1e-8)
    assert h.length == pytest.approx(v.length, abs=1e-8)
    assert v.parameter == pytest.approx(0.5 * np.tan(np.pi / 6), abs=1e-6)
    assert v.degrees() == [3, 3]
    for ang in v.angles():
        assert np.allclose(ang, 120.0, atol=1e-4)
    assert trees.three_sides == pytest.approx(3.0)
    assert v.length < trees.three_sides


def test_axis_weighted_breaks_tie():
    trees = steiner_tree_square(axis_weighted(1.0, 1.3))
    assert trees.vertical.length == pytest.approx(3.032, abs=1e-3)
    assert trees.horizontal.length == pytest.approx(3.252, abs=1e-3)
    assert trees.best is trees.vertical


def test_scaling_with_side():
    a = steiner_tree_square(euclidean(), 1.0).vertical.length
    b = steiner_tree_square(euclidean(), 2.5).vertical.length
    assert b == pytest.approx(2.5 * a, rel=1e-8)


def test_optimum_beats_bar_endpoints():
    n = euclidean()
    best = steiner_tree_square(n).vertical
    for a in (0.0, 0.1, 0.4, 0.5):
        assert bar_tree(n, 1.0, "vertical", a).length >= best.length - 1e-12
    with pytest.raises(ValueError):
        bar_tree(n, 1.0, "diagonal", 0.2)


def test_faces_partition_square():
    for tree in (steiner_tree_square().vertical, steiner_tree_square().horizontal):
        faces = tree.faces(1.0)
        assert sum(p.area for p in faces.values()) == pytest.approx(1.0)
        _check_partition(faces, 1.0)
    with pytest.raises(DegenerateOverlap):
        _check_partition({1: steiner_tree_square().vertical.faces(1.0)["left"]}, 1.0)


def test_symmetric_difference_regions():
    trees = steiner_tree_square()
    regions = symmetric_difference_regions(trees.vertical, trees.horizontal)
    a = 0.5 * np.tan(np.pi / 6)
    # right face: trapezoid of area (1 - a)/2 minus the inner triangle of area a/2
    assert regions[1][0].area == pytest.approx(regions[3][0].area, abs=1e-12)
    assert regions[1][0].area == pytest.approx(0.5 - a, abs=1e-8)
    assert regions[1][1].is_empty or regions[1][1].area < 1e-12
    assert face_overlap(trees.vertical, trees.horizontal, 1, 2).area > 0
    cx, cy = region_centre(regions[1][0])
    assert cx > 0.5 and 0 < cy < 1


def test_table_norm_matches_euclidean():
    th = np.linspace(0, np.pi, 720, endpoint=False)
    norm = table_norm(th, np.ones_like(th))
    v = np.array([[1.0, 0.0], [0.3, -0.7], [2.0, 2.0]])
    assert np.allclose(norm(v), np.hypot(v[:, 0], v[:, 1]), rtol=1e-4)
    assert check_norm(norm, np.random.default_rng(0))
    trees = steiner_tree_square(norm)
    assert trees.vertical.length == pytest.approx(1 + np.sqrt(3), rel=1e-4)


def test_table_norm_rejections():
    th = np.array([0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4])
    with pytest.raises(NormError):
        table_norm(th, np.array([1.0, 3.0, 1.0, 1.0]))
    with pytest.raises(NormError):
        table_norm(th, np.array([1.0, -1.0, 1.0, 1.0]))
    with pytest.raises(NormError):
        table_norm(th[:1], np.ones(1))
    with pytest.raises(NormError):
        axis_weighted(0.0, 1.0)


@settings(max_examples=25, deadline=None)
@given(wx=st.floats(0.5, 2.0), wy=st.floats(0.5, 2.0))
def test_axis_weighted_norm_properties(wx, wy):
    n = axis_weighted(wx, wy)
    assert check_norm(n, np.random.default_rng(1))
    trees = steiner_tree_square(n)
    assert trees.best.length <= trees.three_sides + 1e-9
    assert trees.best.length <= min(trees.vertical.length, trees.horizontal.length) + 1e-15


def test_counterexample_sites_on_lattice():
    box = make_box(2, [(0, 23), (0, 23)])
    x, y = counterexample_sites(box)
    trees = steiner_tree_square()
    regions = symmetric_difference_regions(trees.vertical, trees.horizontal)
    assert x in region_sites(regions[1][0], box)
    assert y in region_sites(regions[3][0], box)
    assert (x, y) == ((15, 15), (8, 8))
    assert deepest_site(regions[1][0].buffer(-1.0), box) is None


def test_svg_output():
    trees = steiner_tree_square(axis_weighted(1.0, 1.2))
    text = steiner_svg(trees, symmetric_difference_regions(trees.vertical, trees.horizontal))
    assert text.startswith("<svg") and "stroke-dasharray" in text and "<polygon" in text
    box = make_box(2, [(0, 2), (0, 2)])
    svg = lattice_svg(box, np.ones(9, np.uint8))
    assert svg.count("<rect") == 9
