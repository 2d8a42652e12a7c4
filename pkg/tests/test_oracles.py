import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cbshell.materials import Guccione2D, Guccione3D, LinearElastic, MooneyRivlin
from cbshell.oracles import (OracleError, cylinder_curve, oracle_biaxial_point,
                             oracle_cylinder_inflation, oracle_elastica, pressure_band,
                             stress_differences)

ARTERY = Guccione3D(10e3, 15.0, 8.0, 5.0)
RI, RO = 0.0125, 0.015


def test_elastica_closed_forms():
    L, EI = 10.0, 100.0
    assert oracle_elastica(0.0, EI, L) == (0.0, 0.0)
    ax, tr = oracle_elastica(np.pi * EI / L, EI, L)
    assert ax == pytest.approx(-L)
    assert tr == pytest.approx(2 * L / np.pi)
    ax, tr = oracle_elastica(2 * np.pi * EI / L, EI, L)
    assert ax == pytest.approx(-L)
    assert tr == pytest.approx(0.0, abs=1e-12)


@given(st.floats(-1e-7, 1e-7))
def test_elastica_small_moment_limit_is_continuous(M):
    ax, tr = oracle_elastica(M, 1.0, 2.0)
    k = M
    assert tr == pytest.approx(0.5 * k * 4.0, rel=1e-12, abs=1e-300)
    assert ax <= 0.0


def test_elastica_rejects_bad_input():
    with pytest.raises(ValueError):
        oracle_elastica(1.0, 0.0, 1.0)


def test_mooney_rivlin_uniaxial_stress():
    m = MooneyRivlin(0.1863e6, 0.00979e6)
    lam = 1.5
    d1, _ = stress_differences(m, (lam, lam ** -0.5, lam ** -0.5))
    assert d1 == pytest.approx(2 * (m.C1 + m.C2 / lam) * (lam ** 2 - 1 / lam))
    assert d1 == pytest.approx(610617.7777777778, rel=1e-12)


def test_biaxial_point_linear_and_anisotropic():
    T1, T2 = oracle_biaxial_point(LinearElastic(1.0, 0.25), 1.1, 1.0, h0=2.0)
    e = 0.5 * (1.1 ** 2 - 1)
    assert T1 == pytest.approx(2.0 * e / (1 - 0.0625))
    assert T2 == pytest.approx(2.0 * 0.25 * e / (1 - 0.0625))
    T1, T2 = oracle_biaxial_point(Guccione3D(10e3, 15.0, 8.0, 5.0), 1.2, 1.2)
    assert T1 > T2 > 0


def test_guccione_2d_and_3d_coincide_under_equibiaxial_stretch():
    lam = np.linspace(1.0, 1.3, 13)
    a = oracle_biaxial_point(Guccione3D(2e3, 10.0, 5.0, 4.0), lam, lam)
    b = oracle_biaxial_point(Guccione2D(2e3, 10.0, 5.0, 4.0), lam, lam)
    np.testing.assert_allclose(a, b, rtol=1e-12)


@pytest.fixture(scope="module")
def cylinder():
    return oracle_cylinder_inflation(ARTERY, RI, RO, 13.33e3)


def test_cylinder_boundary_conditions(cylinder):
    s = cylinder
    assert s.sigma_rr[0] == pytest.approx(-13.33e3)
    assert abs(s.sigma_rr[-1]) < 1e-6 * 13.33e3
    assert s.radial_stress(RO) == pytest.approx(0.0, abs=1e-6 * 13.33e3)


def test_cylinder_axial_balance(cylinder):
    s = cylinder
    assert s.axial_force() == pytest.approx(s.pressure * np.pi * s.r_inner ** 2, rel=1e-8)


def test_cylinder_frozen_values(cylinder):
    assert cylinder.r_inner == pytest.approx(14.93e-3, abs=1e-5)
    assert cylinder.lambda_z == pytest.approx(1.118, abs=1e-3)
    assert cylinder.sigma_tt[0] == pytest.approx(169e3, rel=0.01)
    assert cylinder.sigma_tt[-1] == pytest.approx(66e3, rel=0.02)


def test_cylinder_pressure_sweep():
    ri, _ = cylinder_curve(ARTERY, RI, RO, [5e3, 10e3, 18.66e3, 26.66e3])
    np.testing.assert_allclose(ri * 1e3, [13.96, 14.66, 15.22, 15.51], atol=0.01)


def test_cylinder_thin_wall_limit_follows_laplace():
    m = MooneyRivlin(1e5, 0.0)
    s = oracle_cylinder_inflation(m, 1.0, 1.001, 20.0)
    h = s.r_outer - s.r_inner
    hoop = np.trapezoid(s.sigma_tt, s.r) / h
    assert hoop == pytest.approx(s.pressure * s.r_inner / h, rel=2e-3)


@given(st.floats(1e3, 12e3), st.floats(1e3, 12e3))
@settings(max_examples=5)
def test_inner_radius_increases_with_pressure(p1, p2):
    lo, hi = sorted((p1, p2))
    ri, lz = cylinder_curve(ARTERY, RI, RO, [lo, hi])
    assert ri[1] >= ri[0] - 1e-12


def test_cylinder_rejects_compressible_model():
    with pytest.raises(TypeError):
        oracle_cylinder_inflation(LinearElastic(1.0, 0.3), RI, RO, 1e3)
    with pytest.raises(ValueError):
        oracle_cylinder_inflation(ARTERY, RO, RI, 1e3)


def test_zero_pressure_is_reference():
    s = oracle_cylinder_inflation(ARTERY, RI, RO, 0.0)
    assert s.r_inner == RI and s.lambda_z == 1.0


def test_pressure_band():
    assert pressure_band(np.diag([1.0, 2.0, 3.0])) == pytest.approx(-2.0)
    assert pressure_band(np.array([1.0, 2.0, 3.0, 9.0, 9.0, 9.0])) == pytest.approx(-2.0)


def test_oracle_error_type():
    assert issubclass(OracleError, RuntimeError)
