import numpy as np
import pytest

from gibbslab.events import always, all_equal, block_sites, ising_spin, majority_is, never, plus_at, site_is
from gibbslab.lattice import MINUS, PLUS, centered_box, make_box


def test_site_event_and_combinators():
    box = make_box(2, [(0, 1), (0, 1)])
    s = np.array([[1, 2, 1, 1], [2, 2, 2, 2]], dtype=np.uint8)
    a, b = site_is(box, (0, 0), 1), site_is(box, (1, 0), 2)
    assert list(a(s)) == [True, False]
    assert list((a & b)(s)) == [False, False]
    assert list((a | b)(s)) == [True, True]
    assert list((~a)(s)) == [False, True]
    assert (a & b).support == (0, 2)
    assert a(s[0]) == True  # noqa: E712


def test_trivial_events():
    s = np.ones((3, 4), dtype=np.uint8)
    assert always()(s).all() and not never()(s).any()
    box = make_box(1, [(0, 3)])
    assert all_equal(box, [], 2)(s).all()


def test_block_sites_validation():
    box = centered_box(5, 5, 5)
    assert len(block_sites(box, (0, 0, 0), 3)) == 27
    with pytest.raises(ValueError):
        block_sites(box, (0, 0, 0), 2)
    with pytest.raises(ValueError):
        block_sites(box, (2, 0, 0), 3)


def test_majority_never_ties():
    box = centered_box(3, 3)
    rng = np.random.default_rng(0)
    s = rng.integers(1, 3, size=(200, 9)).astype(np.uint8)
    up, down = majority_is(box, (0, 0), 3, 1), majority_is(box, (0, 0), 3, -1)
    assert np.all(up(s) ^ down(s))
    assert majority_is(box, (0, 0), 1, 1).support == plus_at(box, (0, 0)).support


def test_ising_spin_observable():
    box = make_box(1, [(0, 1)])
    s = np.array([[PLUS, MINUS]], dtype=np.uint8)
    assert ising_spin(box, (0,))(s)[0] == 1.0
    assert ising_spin(box, (1,))(s)[0] == -1.0
