import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from gausskk.bodies import (BodyKind, CheckResult, ball, build_random_polytope, build_random_symmetric_polytope,
                            check_convexity, check_symmetry, contains, cube, cube_half_width, empty_set,
                            full_space, half_volume_cube, halfspace, halfspace_intersection, slab,
                            slab_conjunction)
from gausskk.errors import ContractViolation
from gausskk.sampling import RngStream


def test_contains_point_and_batch():
    b = ball(3, 1.0)
    assert contains(b, np.zeros(3)) is True
    assert contains(b, np.array([2.0, 0, 0])) is False
    out = b.contains(np.array([[0, 0, 0], [0, 0, 1.0], [1, 1, 0]]))
    assert out.tolist() == [True, True, False]


def test_dimension_mismatch_raises():
    with pytest.raises(ContractViolation):
        ball(3, 1.0).contains(np.zeros(4))


def test_halfspace_is_positive_side():
    h = halfspace(np.eye(3)[0], 0.0)
    assert not h.contains(np.array([-1.0, 0, 0]))
    assert h.contains(np.array([1.0, 5, -5]))
    assert not h.symmetric


def test_halfspace_normalizes_normal():
    # 3x + 4y >= 5 is the unit-normal halfspace 0.6x + 0.8y >= 1
    h = halfspace([3.0, 4.0], 5.0)
    assert np.allclose(h.normals, [[-0.6, -0.8]])
    assert h.contains(np.array([0.6, 0.8]))
    assert not h.contains(np.array([0.59, 0.8]))


def test_halfspace_inner_radius_when_origin_inside():
    assert halfspace([1.0, 0.0], -0.4).inner_radius == pytest.approx(0.4)
    assert halfspace([1.0, 0.0], 0.4).inner_radius is None


def test_zero_normal_rejected():
    with pytest.raises(ContractViolation):
        halfspace([0.0, 0.0], 1.0)


def test_cube_half_width_gives_volume_half():
    for n in (1, 4, 64, 1024):
        c = cube_half_width(n)
        assert (2 * stats.norm.cdf(c) - 1) ** n == pytest.approx(0.5, rel=1e-12)


def test_half_volume_cube_monte_carlo():
    b = half_volume_cube(16)
    x = RngStream(4).generator.standard_normal((100_000, 16))
    f = b.contains(x).mean()
    assert abs(f - 0.5) <= 4 * math.sqrt(0.25 / 100_000)


def test_symmetric_polytope_facets():
    b = build_random_symmetric_polytope(10, 4, (0.5, 1.5), RngStream(2))
    a, c = b.facets()
    assert a.shape == (8, 10)
    assert np.allclose(np.linalg.norm(a, axis=1), 1, atol=1e-12)
    assert np.allclose(a[:4], -a[4:])
    assert b.symmetric
    assert b.inner_radius == pytest.approx(c.min())


def test_zero_facet_polytope_warns_and_is_full_space():
    with pytest.warns(RuntimeWarning):
        b = build_random_symmetric_polytope(5, 0, 1.0, RngStream(0))
    assert b.kind is BodyKind.FULL


def test_one_pair_polytope_is_a_slab():
    b = build_random_symmetric_polytope(2, 1, 0.5, RngStream(11))
    w = b.normals[0]
    x = RngStream(12).generator.standard_normal((10_000, 2))
    assert np.array_equal(b.contains(x), np.abs(x @ w) <= 0.5)


def test_inscribed_ball_is_inside():
    b = build_random_polytope(8, 12, (0.5, 1.5), RngStream(3))
    u = RngStream(4).generator.standard_normal((5000, 8))
    u *= b.inner_radius / np.linalg.norm(u, axis=1)[:, None] * RngStream(5).generator.uniform(size=(5000, 1))
    assert b.contains(u).all()


def test_random_polytope_is_not_symmetric():
    b = build_random_polytope(6, 5, 1.0, RngStream(1))
    assert not b.symmetric
    assert b.inner_radius == 1.0


def test_intersection_detects_symmetry():
    w = np.array([[1.0, 0], [-1.0, 0], [0, 1.0], [0, -1.0]])
    assert halfspace_intersection(w, [1, 1, 2, 2]).symmetric
    assert not halfspace_intersection(w, [1, 2, 2, 2]).symmetric


def test_slab_and_conjunction_agree():
    s1 = slab(4, 0.5, 2)
    s2 = slab_conjunction(np.array([[0, 0, 3.0, 0]]), 0.5)
    x = RngStream(7).generator.standard_normal((1000, 4))
    assert np.array_equal(s1.contains(x), s2.contains(x))
    assert s1.label == "slab:e3:0.5"


def test_full_and_empty():
    x = np.ones((3, 2))
    assert full_space(2).contains(x).all()
    assert not empty_set(2).contains(x).any()


def test_radial_function():
    assert cube(3, 2.0).radial(np.array([1.0, 0, 0]))[0] == pytest.approx(2.0)
    u = np.array([1.0, 1.0]) / math.sqrt(2)
    assert cube(2, 1.0).radial(u)[0] == pytest.approx(math.sqrt(2))
    assert ball(2, 3.0).radial(u)[0] == 3.0


@given(st.integers(2, 20), st.integers(1, 8), st.integers(0, 1000))
def test_random_polytopes_pass_convexity_and_symmetry(n, k, seed):
    b = build_random_symmetric_polytope(n, k, (0.5, 2.0), RngStream(seed))
    assert check_convexity(b, trials=200, seed=seed) is CheckResult.PASS
    assert check_symmetry(b, trials=200, seed=seed) is CheckResult.PASS


def test_nonconvex_and_asymmetric_detected():
    class Annulus:
        dim = 2

        def contains(self, x):
            r = np.linalg.norm(x, axis=-1)
            return (r >= 0.5) & (r <= 2.0)

    assert check_convexity(Annulus(), trials=500, seed=1) is CheckResult.FAIL
    assert check_symmetry(halfspace([1.0, 0.0], 0.3), trials=500, seed=1) is CheckResult.FAIL


def test_tiny_body_inconclusive():
    assert check_convexity(ball(2, 1e-5), trials=50, seed=0) is CheckResult.INCONCLUSIVE
    assert not CheckResult.INCONCLUSIVE


def test_negative_radius_rejected():
    with pytest.raises(ContractViolation):
        ball(3, -1.0)
    with pytest.raises(ContractViolation):
        slab_conjunction(np.eye(2), -0.1)
