import numpy as np
import pytest
from hypothesis import given, strategies as st

from cbshell.constitutive import (GaussPointState, Technique, rotate_stress_to_new_frame,
                                  technique1_update, technique2_update, update_gauss_points)
from cbshell.materials import Guccione3D, LinearElastic, MooneyRivlin, constant_elasticity_tensor
from cbshell.oracles import stress_differences
from cbshell.tensor import rotation_matrix


def test_mooney_rivlin_uniaxial_closed_form():
    m = MooneyRivlin(0.1863e6, 0.00979e6)
    lam = 2.0
    F = np.diag([lam, lam ** -0.5, lam ** -0.5])
    sigma, S, gamma, _ = technique1_update(F, m)
    assert sigma[0] == pytest.approx(2 * (m.C1 + m.C2 / lam) * (lam ** 2 - 1 / lam), rel=1e-12)
    np.testing.assert_allclose(sigma[1:], 0.0, atol=1e-9 * sigma[0])


def test_guccione_equibiaxial_material_point():
    m = Guccione3D(10e3, 15.0, 8.0, 5.0)
    lam = 1.1
    F = np.diag([lam, lam, 1 / lam ** 2])
    sigma, *_ = technique1_update(F, m)
    d1, d2 = stress_differences(m, (lam, lam, 1 / lam ** 2))
    np.testing.assert_allclose(sigma[:3], [d1, d2, 0.0], rtol=1e-12, atol=1e-9)
    assert sigma[0] > sigma[1]


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_technique1_is_objective(a, b, c):
    m = MooneyRivlin(1.0, 0.2)
    F = np.array([[1.3, 0.2, 0.0], [0.1, 0.9, 0.0], [0.0, 0.0, 1 / (1.3 * 0.9 - 0.02)]])
    Q = rotation_matrix(np.array([0.0, 0.0, c]))
    s1, S1, *_ = technique1_update(F, m)
    s2, S2, *_ = technique1_update(Q @ F, m)
    np.testing.assert_allclose(S1, S2, atol=1e-12)


def test_rotate_stress_to_same_frame_is_identity():
    R = rotation_matrix(np.array([0.1, 0.4, -0.3]))
    s = np.arange(1.0, 7.0)
    np.testing.assert_allclose(rotate_stress_to_new_frame(s, R, R), s, atol=1e-14)


def test_technique2_single_step_matches_constant_tensor():
    C = constant_elasticity_tensor(1.0, 0.3)
    dg = np.array([1e-3, -2e-4, 0, 5e-4, 0, 0])
    sigma, S = technique2_update(np.zeros(6), dg, C, np.eye(3))
    np.testing.assert_allclose(sigma, C @ dg)


def _rigid_history(technique, steps=40, angle=np.pi / 2):
    C = constant_elasticity_tensor(1.0, 0.3)
    J0 = np.diag([1.0, 1.0, 0.1])[None]
    R0 = np.eye(3)[None]
    st_ = GaussPointState.initial(J0, R0)
    stretch = np.diag([1.01, 1.0, 1.0])
    J = J0 @ stretch
    st_ = update_gauss_points(technique, LinearElastic(1.0, 0.3), C, st_, J, R0)
    s0 = st_.sigma.copy()
    for k in range(1, steps + 1):
        Q = rotation_matrix(np.array([0.0, 0.0, angle * k / steps]))
        Jk = J @ Q.T
        st_ = update_gauss_points(technique, LinearElastic(1.0, 0.3), C, st_, Jk, (Q @ R0[0])[None])
    return s0, st_.sigma


@pytest.mark.parametrize("technique", [Technique.TOTAL_HYPERELASTIC, Technique.TOTAL_ACCUMULATED])
def test_rigid_rotation_leaves_lamina_stress(technique):
    s0, s1 = _rigid_history(technique)
    np.testing.assert_allclose(s1, s0, atol=1e-10 * np.max(np.abs(s0)))


def test_technique3_rigid_rotation_residue_vanishes_with_step():
    # the current-configuration increment leaves theta * dtheta / 2 of strain
    errs = []
    for steps in (40, 80, 160):
        s0, s1 = _rigid_history(Technique.INCREMENTAL_LINEARIZED, steps)
        errs.append(np.max(np.abs(s1 - s0)))
        dtheta = (np.pi / 2) / steps
        stiff = np.max(constant_elasticity_tensor(1.0, 0.3))
        assert errs[-1] <= stiff * (np.pi / 2) * dtheta
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.05)


def test_techniques_differ_at_large_strain():
    C = constant_elasticity_tensor(1.0, 0.3)
    m = LinearElastic(1.0, 0.3)
    J0 = np.diag([1.0, 1.0, 0.1])[None]
    R0 = np.eye(3)[None]
    out = {}
    for t in Technique:
        st_ = GaussPointState.initial(J0, R0)
        for k in range(1, 101):
            st_ = update_gauss_points(t, m, C, st_, J0 @ np.diag([1 + 0.02 * k, 1.0, 1.0]), R0)
        out[t] = st_.sigma[0, 0]
    vals = sorted(out.values())
    assert (vals[-1] - vals[0]) / vals[-1] > 0.1
