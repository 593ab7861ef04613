"""Quadrature, harmonic basis, and coefficient-layout tests."""

import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isocap.sphere import (HarmonicCoeffs, ball_volume, build_quadrature,
                           direction, expand, flat_index, harmonic_basis,
                           harmonic_space_dim, lb_eigenvalue, sphere_area,
                           synthesize)


def test_sphere_area_and_ball_volume():
    assert sphere_area(3) == pytest.approx(4.0 * math.pi, rel=1e-15)
    assert ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-15)
    assert ball_volume(3, 2.0) == pytest.approx(32.0 * math.pi / 3.0, rel=1e-15)
    # N-dimensional identity: area = N * volume at radius 1
    for n in (3, 4, 5, 7):
        assert sphere_area(n) == pytest.approx(n * ball_volume(n), rel=1e-14)


def test_lb_eigenvalues_and_space_dims():
    assert [lb_eigenvalue(l, 3) for l in range(4)] == [0.0, 2.0, 6.0, 12.0]
    assert [harmonic_space_dim(l, 3) for l in range(4)] == [1, 3, 5, 7]
    # N = 4: dimensions (l+1)^2
    assert [harmonic_space_dim(l, 4) for l in range(4)] == [1, 4, 9, 16]


def test_quadrature_weights_sum_to_area():
    for deg in (0, 1, 5, 16, 33):
        quad = build_quadrature(3, deg)
        assert quad.weights.sum() == pytest.approx(4.0 * math.pi, rel=1e-14)
        assert np.all(quad.weights > 0)
        npt.assert_allclose(np.linalg.norm(quad.nodes, axis=1), 1.0,
                            atol=1e-14)


def test_quadrature_polynomial_exactness():
    quad = build_quadrature(3, 8)
    x, y, z = quad.nodes.T
    w = quad.weights
    # odd monomials vanish, even ones have closed forms
    assert abs(w @ x) < 1e-13
    assert abs(w @ (x * y * z)) < 1e-13
    assert w @ z**2 == pytest.approx(4.0 * math.pi / 3.0, rel=1e-13)
    assert w @ z**4 == pytest.approx(4.0 * math.pi / 5.0, rel=1e-13)
    assert w @ (x**2 * y**2) == pytest.approx(4.0 * math.pi / 15.0, rel=1e-13)
    assert w @ z**8 == pytest.approx(4.0 * math.pi / 9.0, rel=1e-13)


def test_quadrature_antipodal_symmetry():
    quad = build_quadrature(3, 12)
    # every node's antipode is also a node: odd functions integrate to 0
    x, y, z = quad.nodes.T
    assert abs(quad.weights @ (x**3 * z**2)) < 1e-13


def test_harmonic_basis_orthonormal():
    L = 6
    quad = build_quadrature(3, 2 * L)
    B = harmonic_basis(L, quad.nodes)
    gram = (B * quad.weights[:, None]).T @ B
    npt.assert_allclose(gram, np.eye((L + 1) ** 2), atol=5e-13)


def test_flat_index_layout():
    assert flat_index(0, 0) == 0
    assert flat_index(1, 0) == 1
    assert flat_index(2, 4) == 8
    with pytest.raises(ValueError):
        flat_index(2, 5)
    with pytest.raises(ValueError):
        flat_index(1, -1)


def test_degree_slice_is_view():
    c = HarmonicCoeffs.zeros(3)
    c.degree_slice(2)[:] = 1.0
    assert c.values[4:9].sum() == 5.0
    assert c.values[:4].sum() == 0.0


def test_expand_synthesize_roundtrip():
    rng = np.random.default_rng(7)
    c = HarmonicCoeffs.zeros(5)
    c.values[:] = rng.normal(size=c.values.size)
    quad = build_quadrature(3, 16)
    samples = synthesize(c, quad.nodes)
    back = expand(samples, 5, quad)
    npt.assert_allclose(back.values, c.values, atol=1e-12)


def test_coordinate_functions_in_degree_one_slots():
    """The degree-1 slots carry (x, y, z) up to sign and normalisation.

    This freezes the basis convention the barycenter projection relies
    on: each coordinate occupies exactly one slot with coefficient of
    magnitude sqrt(4 pi / 3).
    """
    quad = build_quadrature(3, 8)
    k = math.sqrt(4.0 * math.pi / 3.0)
    expected_slot = {0: 2, 1: 0, 2: 1}  # x -> (1,2), y -> (1,0), z -> (1,1)
    expected_sign = {0: -1.0, 1: -1.0, 2: 1.0}
    for axis in range(3):
        c = expand(quad.nodes[:, axis], 1, quad)
        sl = c.degree_slice(1)
        hot = int(np.argmax(np.abs(sl)))
        assert hot == expected_slot[axis]
        assert sl[hot] == pytest.approx(expected_sign[axis] * k, rel=1e-13)
        # the other two slots and the constant are empty
        assert np.abs(np.delete(sl, hot)).max() < 1e-14
        assert abs(c.values[0]) < 1e-14


def test_single_and_coefficient_access():
    c = HarmonicCoeffs.single(2, 2, 0.5, max_degree=4)
    assert c.max_degree == 4
    assert c.coefficient(2, 2) == 0.5
    assert c.l2_norm() == pytest.approx(0.5)
    padded = HarmonicCoeffs.single(1, 0, 1.0).padded(3)
    assert padded.max_degree == 3
    assert padded.coefficient(1, 0) == 1.0


def test_synthesize_single_harmonic_l2_norm():
    # an orthonormal basis function has squared integral 1
    quad = build_quadrature(3, 12)
    for (l, m) in [(0, 0), (1, 1), (2, 0), (3, 5)]:
        f = synthesize(HarmonicCoeffs.single(l, m), quad.nodes)
        assert quad.weights @ f**2 == pytest.approx(1.0, rel=1e-12)


def test_direction_validation():
    d = direction(np.array([0.0, 0.0, 1.0]))
    npt.assert_array_equal(d, [0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        direction(np.array([0.0, 0.0, 1.1]))


def test_build_quadrature_rejects_bad_input():
    with pytest.raises(ValueError):
        build_quadrature(3, -1)
    with pytest.raises(ValueError):
        build_quadrature(2, 4)
    with pytest.raises(NotImplementedError):
        build_quadrature(4, 4)


@given(st.integers(min_value=0, max_value=12), st.integers(min_value=3, max_value=8))
def test_lb_eigenvalue_formula(l, n):
    assert lb_eigenvalue(l, n) == l * (l + n - 2)


@settings(deadline=None, max_examples=25)
@given(st.floats(min_value=-4.0, max_value=4.0, allow_nan=False),
       st.floats(min_value=-4.0, max_value=4.0, allow_nan=False),
       st.floats(min_value=0.1, max_value=4.0, allow_nan=False))
def test_synthesize_is_linear(a, b, z):
    quad = build_quadrature(3, 8)
    c1 = HarmonicCoeffs.single(2, 1, a)
    c2 = HarmonicCoeffs.single(2, 1, b)
    lhs = synthesize(c1, quad.nodes) * z + synthesize(c2, quad.nodes)
    c3 = HarmonicCoeffs.single(2, 1, a * z + b)
    npt.assert_allclose(lhs, synthesize(c3, quad.nodes), atol=1e-11)
