import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from cbshell.tensor import (DegenerateDeformation, cofactor3, det3, full_to_tangent, inv3,
                            push_forward_stress, push_forward_tangent, rotate_vectors,
                            rotation_matrix, strain_to_voigt, sym_to_voigt, tangent_to_full,
                            voigt_to_strain, voigt_to_sym)

finite = st.floats(-2.0, 2.0, allow_nan=False, allow_subnormal=False)
vec6 = arrays(float, 6, elements=finite)
mat3 = arrays(float, (3, 3), elements=st.floats(-0.4, 0.4, allow_nan=False))


def test_voigt_order_and_shear_convention():
    a = np.array([[1.0, 4.0, 6.0], [4.0, 2.0, 5.0], [6.0, 5.0, 3.0]])
    np.testing.assert_array_equal(sym_to_voigt(a), [1, 2, 3, 4, 5, 6])
    np.testing.assert_array_equal(strain_to_voigt(a), [1, 2, 3, 8, 10, 12])


@given(vec6)
def test_voigt_round_trips(v):
    np.testing.assert_allclose(sym_to_voigt(voigt_to_sym(v)), v)
    np.testing.assert_allclose(strain_to_voigt(voigt_to_strain(v)), v)


@given(arrays(float, (6, 6), elements=finite))
def test_tangent_round_trip_of_symmetric_tangent(a):
    d = a + a.T
    np.testing.assert_allclose(full_to_tangent(tangent_to_full(d)), d)


@given(mat3)
def test_inverse_and_cofactor(m):
    F = np.eye(3) + m
    np.testing.assert_allclose(inv3(F) @ F, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(cofactor3(F), det3(F) * np.linalg.inv(F).T, atol=1e-10)


def test_singular_map_raises():
    with pytest.raises(DegenerateDeformation):
        inv3(np.zeros((3, 3)))
    with pytest.raises(DegenerateDeformation):
        push_forward_stress(np.diag([1.0, 1.0, 0.0]), 1.0, np.ones(6))


def test_push_forward_identity_is_exact():
    S = np.arange(1.0, 7.0)
    A = np.arange(36.0).reshape(6, 6)
    C = A + A.T
    assert np.max(np.abs(push_forward_stress(np.eye(3), 1.0, S) - S)) <= 1e-14
    assert np.max(np.abs(push_forward_tangent(np.eye(3), 1.0, C) - C)) <= 1e-14


def test_push_forward_rejects_bad_density_ratio():
    with pytest.raises(ValueError):
        push_forward_stress(np.eye(3), 0.0, np.ones(6))


@given(mat3, vec6)
def test_pushed_stress_is_symmetric_and_scales(m, S):
    F = np.eye(3) + m
    s = voigt_to_sym(push_forward_stress(F, 2.0, S))
    np.testing.assert_allclose(s, s.T, atol=1e-12)
    np.testing.assert_allclose(push_forward_stress(F, 2.0, S), 2 * push_forward_stress(F, 1.0, S))


@given(arrays(float, 3, elements=st.floats(-6, 6, allow_nan=False)))
def test_rotation_matrix_is_orthogonal_and_matches_vector_rotation(r):
    Q = rotation_matrix(r)
    np.testing.assert_allclose(Q @ Q.T, np.eye(3), atol=1e-12)
    assert det3(Q) == pytest.approx(1.0)
    v = np.array([0.3, -1.0, 2.0])
    np.testing.assert_allclose(rotate_vectors(v, r), Q @ v, atol=1e-12)
