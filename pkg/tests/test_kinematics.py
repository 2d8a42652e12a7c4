import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from cbshell.kinematics import (LaminaDeformation, almansi, deformation_gradient_lamina,
                                green_lagrange, incremental_linear_strain, incremental_rotation)
from cbshell.tensor import rotation_matrix, strain_to_voigt

small = arrays(float, (3, 3), elements=st.floats(-0.3, 0.3))
rotvec = arrays(float, 3, elements=st.floats(-3.0, 3.0))


def test_gradient_from_jacobians():
    J_ref = np.diag([1.0, 2.0, 0.1])
    J_cur = np.diag([1.5, 2.0, 0.05])
    np.testing.assert_allclose(deformation_gradient_lamina(J_cur, J_ref), np.diag([1.5, 1.0, 0.5]))


@given(small, rotvec)
def test_green_lagrange_is_objective(m, r):
    F = np.eye(3) + m
    Q = rotation_matrix(r)
    np.testing.assert_allclose(green_lagrange(Q @ F), green_lagrange(F), atol=1e-12)


@given(small)
def test_almansi_is_pulled_green_lagrange(m):
    F = np.eye(3) + m
    np.testing.assert_allclose(F.T @ almansi(F) @ F, green_lagrange(F), atol=1e-10)


def test_uniaxial_green_lagrange_and_bundle():
    d = LaminaDeformation(np.diag([2.0, 1.0, 1.0]))
    np.testing.assert_allclose(d.E_voigt, [1.5, 0, 0, 0, 0, 0])
    assert d.det == pytest.approx(2.0)


@given(small)
def test_incremental_strain_linearizes_green_lagrange(m):
    J_prev = np.eye(3)
    eps = 1e-6
    J_cur = J_prev + eps * m
    e = incremental_linear_strain(J_prev, J_cur, np.eye(3))
    # Jacobian rows hold derivatives, so F = J_cur^T here
    E = strain_to_voigt(green_lagrange(J_cur.T))
    np.testing.assert_allclose(e, E, atol=1e-10)


@given(rotvec)
def test_incremental_rotation_recovers_rigid_spin(r):
    r = r * 0.01
    Q = rotation_matrix(r)
    J_prev = np.diag([1.0, 2.0, 0.5])
    J_cur = J_prev @ Q.T      # rows rotate with the body
    R = incremental_rotation(J_prev, J_cur)
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
    # the Cayley map agrees with the exact rotation to third order
    np.testing.assert_allclose(R, Q, atol=np.linalg.norm(r) ** 3 + 1e-14)
    # a rigid step leaves only the second-order strain of the linearization
    assert np.max(np.abs(incremental_linear_strain(J_prev, J_cur, np.eye(3)))) <= np.linalg.norm(r) ** 2
