import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polybubble.errors import ConfigError
from polybubble.lattice import (admissibility_ratio, generate, interaction_matrix, interaction_sums,
                                matrix_from_array, periodic_row_sum, tail_bound)


def test_full_box_k1():
    lat = generate(1, "full-box", radius=2)
    assert lat.points == ((-2,), (-1,), (0,), (1,), (2,))


def test_full_box_k2():
    lat = generate(2, "full-box", radius=1)
    assert lat.n == 9
    assert set(lat.points) == {(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)}


def test_duplicate_points_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        generate(1, "explicit-list", points=[0, 0])


def test_k_range_enforced():
    # (N-2m)/2 = 2.5 for N=7, m=1: k=3 is out of range
    with pytest.raises(ConfigError):
        generate(3, "full-box", radius=1, N=7, m=1)
    generate(2, "full-box", radius=1, N=7, m=1)


def test_embedding_pads_with_zeros():
    lat = generate(2, "explicit-list", points=[(0, 0), (1, 2)], L=3.0)
    E = lat.embedded(7)
    assert E.shape == (2, 7)
    assert np.all(E[:, 2:] == 0.0)
    assert E[1, :2].tolist() == [3.0, 6.0]


def test_admissibility_three_points():
    lat = generate(1, "explicit-list", points=[0, 1, 2])
    sums = interaction_sums(lat, 2.0)
    assert sums.tolist() == [1.25, 2.0, 1.25]
    assert admissibility_ratio(lat, 2.0) == pytest.approx(1.6, rel=1e-15)


@pytest.mark.parametrize("tau", [1.5, 2.0, 3.7])
def test_admissibility_two_points(tau):
    lat = generate(1, "explicit-list", points=[0, 1])
    assert admissibility_ratio(lat, tau) == 1.0


def test_admissibility_box_bounded_and_monotone():
    ratios = [admissibility_ratio(generate(1, "full-box", radius=R), 2.0) for R in (5, 10, 20, 50)]
    assert all(b >= a for a, b in zip(ratios, ratios[1:]))
    # the centre row sum tends to 2 zeta(2) and the end row to zeta(2): ratio below 2
    assert ratios[-1] < 2.0
    # direct summation oracle at R = 50
    pts = np.arange(-50, 51)
    rows = [sum(abs(p - q) ** -2.0 for q in pts if q != p) for p in pts]
    assert ratios[-1] == pytest.approx(max(rows) / min(rows), rel=1e-12)


def test_interaction_matrix_examples():
    assert interaction_matrix(generate(1, "explicit-list", points=[0, 1]), 7, 1).d[0, 1] == 1.0
    d = interaction_matrix(generate(1, "explicit-list", points=[0, 1, 2]), 7, 1).d
    assert d[0, 2] == 0.03125
    d2 = interaction_matrix(generate(2, "explicit-list", points=[(0, 0), (1, 1)]), 9, 1).d
    assert d2[0, 1] == pytest.approx(2.0 ** -3.5, rel=1e-15)


def test_interaction_matrix_invariants():
    M = interaction_matrix(generate(2, "full-box", radius=2), 9, 1)
    d = M.d
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0)
    assert np.all(d[~np.eye(M.n, dtype=bool)] > 0)
    assert np.allclose(M.row_sums, d.sum(axis=1), rtol=1e-13)
    assert M.c0 <= M.row_sums.min() <= M.row_sums.max() <= M.c1


def test_matrix_from_array_rejects_bad_input():
    with pytest.raises(ValueError):
        matrix_from_array([[0, 1], [2, 0]])
    with pytest.raises(ValueError):
        matrix_from_array([[0, 0], [0, 0]])
    with pytest.raises(ValueError):
        matrix_from_array([[1, 1], [1, 0]])


def test_periodic_sum_zeta():
    # k=1: sum over Z \ {0} of |z|^-s = 2 zeta(s)
    val, err = periodic_row_sum(1, 5.0, terms=200)
    zeta5 = 1.0369277551433699
    assert abs(val - 2 * zeta5) <= err
    assert err < 1e-8


def test_tail_bound_dominates_direct_tail():
    k, e, R = 2, 5.0, 10
    big = generate(k, "full-box", radius=200).array()
    inf = np.max(np.abs(big), axis=1)
    far = big[inf > R]
    direct = np.sum(np.sqrt((far ** 2).sum(axis=1)) ** -e)
    assert direct <= tail_bound(k, e, R)


def test_mirror_map():
    lat = generate(1, "full-box", radius=3)
    perm = lat.mirror_map()
    assert np.array_equal(lat.array()[perm], -lat.array())
    assert generate(1, "explicit-list", points=[0, 1]).mirror_map() is None


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=2, max_size=12, unique=True), st.floats(1.2, 4.0))
def test_interaction_sums_match_direct_loop(points, tau):
    lat = generate(1, "explicit-list", points=points)
    direct = [sum(abs(p - q) ** -tau for q in points if q != p) for p in sorted(points)]
    assert np.allclose(interaction_sums(lat, tau), direct, rtol=1e-13)
    assert admissibility_ratio(lat, tau) >= 1.0
