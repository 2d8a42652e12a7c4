import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from cbshell.materials import (EnergyOverflow, Guccione2D, Guccione3D, LinearElastic, MooneyRivlin,
                               _raw_stress_tangent, condense_E33, constant_elasticity_tensor,
                               derive_mooney_rivlin_from_elastic, material_tangent, pk2_stress,
                               strain_energy)
from cbshell.tensor import voigt_to_strain

MODELS = [LinearElastic(2.0e5, 0.3), MooneyRivlin(0.1863e6, 0.00979e6),
          Guccione3D(2.0e3, 10.0, 5.0, 4.0), Guccione2D(2.0e3, 10.0, 5.0, 4.0)]
IDS = [type(m).__name__ for m in MODELS]


def strains(amp=0.15):
    return arrays(float, 6, elements=st.floats(-amp, amp)).map(lambda g: np.where(np.arange(6) == 2, 0.0, g))


def _reduced_energy(model, g):
    return strain_energy(model, condense_E33(g) if model.incompressible else g)


@pytest.mark.parametrize("model", MODELS, ids=IDS)
@given(gamma=strains())
def test_stress_is_energy_gradient(model, gamma):
    h = 1e-6
    S = pk2_stress(model, gamma)
    free = [0, 1, 3, 4, 5] if model.incompressible else range(6)
    for J in free:
        d = np.zeros(6)
        d[J] = h
        fd = (_reduced_energy(model, gamma + d) - _reduced_energy(model, gamma - d)) / (2 * h)
        # relative check, floored at a small fraction of the stiffness near zero strain
        scale = max(np.max(np.abs(S)), 1e-2 * np.max(np.abs(material_tangent(model, np.zeros(6)))))
        assert abs(fd - S[J]) <= 1e-5 * scale


@pytest.mark.parametrize("model", MODELS, ids=IDS)
@given(gamma=strains())
def test_tangent_is_stress_gradient(model, gamma):
    h = 1e-6
    D = material_tangent(model, gamma)
    free = [0, 1, 3, 4, 5] if model.incompressible else range(6)
    for J in free:
        d = np.zeros(6)
        d[J] = h
        fd = (pk2_stress(model, gamma + d) - pk2_stress(model, gamma - d)) / (2 * h)
        np.testing.assert_allclose(D[:, J], fd, atol=1e-4 * np.max(np.abs(D)))
    np.testing.assert_allclose(D, D.T, atol=1e-9 * np.max(np.abs(D)))


@pytest.mark.parametrize("model", MODELS[1:3], ids=IDS[1:3])
@given(gamma=strains(0.3))
def test_condensation_contract(model, gamma):
    cs = condense_E33(gamma)
    C = np.eye(3) + 2.0 * voigt_to_strain(cs.gamma)
    assert abs(np.linalg.det(C) - 1.0) <= 1e-10
    S, D = pk2_stress(model, gamma), material_tangent(model, gamma)
    assert abs(S[2]) <= 1e-12
    assert np.max(np.abs(D[2])) <= 1e-12 and np.max(np.abs(D[:, 2])) <= 1e-12


@pytest.mark.parametrize("model", MODELS[1:3], ids=IDS[1:3])
@given(gamma=strains(0.3))
def test_incompressible_energy_nonnegative(model, gamma):
    assert _reduced_energy(model, gamma) >= -1e-9 * model.C1
    assert _reduced_energy(model, np.zeros(6)) == pytest.approx(0.0, abs=1e-12)


def test_guccione_direct_evaluation_value():
    # only E11 = 0.1, unit exponents: S11 = C1 C2 E11 exp(0.01)
    m = Guccione3D(10e3, 1.0, 1.0, 1.0)
    S, _ = _raw_stress_tangent(m, np.array([0.1, 0, 0, 0, 0, 0]), need_tangent=False)
    assert S[0] == pytest.approx(1010.05016708, rel=1e-9)
    assert S[0] == pytest.approx(1.01005e3, rel=1e-5)


def test_guccione_tangent_at_zero_strain():
    m = Guccione3D(10e3, 15.0, 8.0, 5.0)
    _, D = _raw_stress_tangent(m, np.zeros(6))
    np.testing.assert_allclose(np.diag(D)[:3], [10e3 * 15.0, 10e3 * 8.0, 10e3 * 8.0])


def test_guccione_quadratic_form_counts_both_shear_orders():
    # E12 and E21 both enter; with engineering shear gamma12 = 2 E12 the weight is C4/2
    m = Guccione3D(1.0, 1.0, 1.0, 3.0)
    g = np.array([0, 0, 0, 0.2, 0, 0])
    assert strain_energy(m, g) == pytest.approx(0.5 * np.expm1(3.0 * 2 * 0.1 ** 2))


def test_energy_overflow_is_reported():
    with pytest.raises(EnergyOverflow):
        pk2_stress(Guccione3D(1.0, 1e6, 1.0, 1.0), np.array([1.0, 0, 0, 0, 0, 0]))


def test_derived_elastic_constants():
    assert derive_mooney_rivlin_from_elastic(1.0, 0.0, 0.5) == pytest.approx((6.0, 0.5))
    assert derive_mooney_rivlin_from_elastic(0.5, 0.5, 0.499) == pytest.approx((5.996, 0.499))


def test_constant_tensor_is_plane_stress():
    d = constant_elasticity_tensor(1.0, 0.25)
    assert d[0, 0] == pytest.approx(1 / (1 - 0.25 ** 2))
    assert np.all(d[2] == 0) and np.all(d[:, 2] == 0)


@pytest.mark.parametrize("cls,args", [(LinearElastic, (-1.0, 0.3)), (LinearElastic, (1.0, 0.5)),
                                      (MooneyRivlin, (0.0, 1.0)), (Guccione3D, (0.0, 1, 1, 1)),
                                      (Guccione2D, (1.0, np.nan, 1, 1))])
def test_invalid_constants_rejected(cls, args):
    with pytest.raises(ValueError):
        cls(*args)
