import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cbshell.constitutive import Technique
from cbshell.dynamics import (ClosedEndForce, Constraints, LoadSchedule, ShellModel, Solver,
                              SolverConfig, SurfacePressure)
from cbshell.materials import LinearElastic, MooneyRivlin, strain_energy
from cbshell.scenarios import (CantileverGeometry, SquareGeometry, cantilever_mesh, square_mesh)
from cbshell.tensor import rotation_matrix


def _free_model(technique=Technique.TOTAL_HYPERELASTIC, material=None, compiled=True):
    mesh = cantilever_mesh(CantileverGeometry(length_m=2.0, width_m=1.0, thickness_m=0.1,
                                              elements_length=2, elements_width=2))
    return ShellModel(mesh, material or MooneyRivlin(1e5, 1e4), 1000.0, technique, compiled=compiled)


def _deform(solver, rng, amp=0.05):
    s = solver.state
    s.x = s.x + amp * rng.standard_normal(s.x.shape)
    s.Y = s.Y + amp * rng.standard_normal(s.Y.shape)
    s.Y /= np.linalg.norm(s.Y, axis=1, keepdims=True)
    solver._refresh_geometry()
    s.gp = solver.model.stress_update(s.gp, solver.J, solver.R)


# ---------------------------------------------------------------------------
# loads and constraints

def test_schedule_values_and_inverse():
    s = LoadSchedule([(0.0, 10.0, 2.0), (10.0, 10.0, 1.0)])
    assert s.value(1.0) == pytest.approx(5.0)
    assert s.value(2.5) == pytest.approx(10.0)
    assert s.time_of(2.5) == pytest.approx(0.5)
    sm = LoadSchedule([(0.0, 1.0, 1.0)], "smooth")
    assert sm.value(0.5) == pytest.approx(0.5)
    assert sm.time_of(sm.value(0.3)) == pytest.approx(0.3, abs=1e-3)
    with pytest.raises(ValueError):
        LoadSchedule([(0.0, 1.0, 1.0), (2.0, 3.0, 1.0)])


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_smooth_ramp_is_monotone(a, b):
    s = LoadSchedule([(0.0, 1.0, 1.0)], "smooth")
    lo, hi = sorted((a, b))
    assert s.value(lo) <= s.value(hi) + 1e-15


def test_symmetry_constraints_compose():
    c = Constraints.free(3)
    c.symmetry([0, 1], 0)
    c.symmetry([1, 2], 1)
    assert c.trans_fixed[1, 0] and c.trans_fixed[1, 1]
    assert c.rot_fixed[1] and not c.rot_fixed[0] and not c.rot_fixed[2]
    v = np.ones((3, 3))
    om = np.ones((3, 3))
    Y = np.tile([0.0, 0.0, 1.0], (3, 1))
    c.apply(v, om, Y)
    np.testing.assert_allclose(v[1], [0, 0, 1])
    np.testing.assert_allclose(om[1], 0.0)
    np.testing.assert_allclose(om[0], [1.0, 0, 0])   # rotation only about the plane normal


def test_pressure_resultant_on_flat_plate():
    mesh = square_mesh(SquareGeometry(side_m=2.0, thickness_m=0.1))
    sched = LoadSchedule([(0.0, 3.0, 1.0)])
    model = ShellModel(mesh, LinearElastic(1.0, 0.3), 1.0, loads=[SurfacePressure([0], sched, zeta=0.0)])
    f, g, _ = model.external_forces(mesh.X, mesh.Y0, mesh.h0, 1.0)
    np.testing.assert_allclose(f.sum(axis=0), [0, 0, 3.0 * 4.0])
    f_top, g_top = model.pressure_forces(mesh.X, mesh.Y0, mesh.h0, [0], 1.0, 3.0)
    assert g_top.sum(axis=0)[2] == pytest.approx(12.0 * 0.05)


def test_closed_end_force_total():
    X = np.zeros((9, 3))
    X[:, 0] = 2.0
    sched = LoadSchedule([(0.0, 5.0, 1.0)])
    load = ClosedEndForce(np.arange(3), np.array([1.0, 4.0, 1.0]), np.array([0, 0, 1.0]), sched, 0.25)
    mesh = square_mesh(SquareGeometry(side_m=1.0, thickness_m=0.4))
    model = ShellModel(mesh, LinearElastic(1.0, 0.3), 1.0, loads=[load])
    f, _, _ = model.external_forces(X, mesh.Y0, mesh.h0, 1.0)
    assert f[:, 2].sum() == pytest.approx(5.0 * np.pi * 1.8 ** 2 * 0.25)
    assert f[1, 2] == pytest.approx(4 * f[0, 2])


# ---------------------------------------------------------------------------
# internal forces

@pytest.mark.parametrize("technique", list(Technique))
def test_internal_forces_balance(technique, rng):
    solver = Solver(_free_model(technique), SolverConfig())
    _deform(solver, rng)
    s = solver.state
    f, g = solver.model.internal_forces(solver.J, solver.R, s.gp.sigma, s.h)
    scale = np.abs(f).max()
    # no net force and no net moment: rigid motions do no internal work
    np.testing.assert_allclose(f.sum(axis=0), 0.0, atol=1e-10 * scale)
    mom = np.cross(s.x, f).sum(axis=0) + np.cross(s.Y, g).sum(axis=0)
    np.testing.assert_allclose(mom, 0.0, atol=1e-10 * scale * 2.0)


@given(st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3)),
       st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5)))
@settings(max_examples=20)
def test_rigid_motion_is_stress_free(rotvec, shift):
    model = _free_model()
    solver = Solver(model, SolverConfig())
    Q = rotation_matrix(np.array(rotvec))
    s = solver.state
    s.x = s.x @ Q.T + np.array(shift)
    s.Y = s.Y @ Q.T
    solver._refresh_geometry()
    gp = model.stress_update(s.gp, solver.J, solver.R)
    assert np.max(np.abs(gp.sigma)) < 1e-9 * model.materials[0].C1
    f, g = model.internal_forces(solver.J, solver.R, gp.sigma, s.h)
    assert np.max(np.abs(f)) < 1e-9 * model.materials[0].C1


@pytest.mark.parametrize("technique", list(Technique))
def test_compiled_and_numpy_paths_agree(technique, rng):
    runs = []
    for compiled in (True, False):
        model = _free_model(technique, compiled=compiled)
        c = model.constraints
        c.clamp(np.nonzero(np.isclose(model.mesh.X[:, 0], 0.0))[0])
        solver = Solver(model, SolverConfig(dt=2e-4))
        solver.state.v[:] = 0.5 * np.random.default_rng(7).standard_normal(solver.state.v.shape)
        solver.state.omega[:] = 0.5 * np.random.default_rng(8).standard_normal(solver.state.v.shape)
        for _ in range(30):
            solver.step(2e-4)
        runs.append(solver.state)
    a, b = runs
    np.testing.assert_allclose(a.x, b.x, atol=1e-12)
    np.testing.assert_allclose(a.Y, b.Y, atol=1e-12)
    np.testing.assert_allclose(a.gp.sigma, b.gp.sigma, atol=1e-7 * np.abs(b.gp.sigma).max())


# ---------------------------------------------------------------------------
# time integration

def _cantilever(L=1.0, n=8, material=None, technique=Technique.TOTAL_HYPERELASTIC):
    mesh = cantilever_mesh(CantileverGeometry(length_m=L, width_m=0.2, thickness_m=0.1, elements_length=n))
    model = ShellModel(mesh, material or LinearElastic(1.2e6, 0.0), 1000.0, technique)
    model.constraints.clamp(np.nonzero(np.isclose(mesh.X[:, 0], 0.0))[0])
    return model


def test_power_iteration_matches_dense_eigenvalue():
    model = _cantilever(n=2)
    solver = Solver(model, SolverConfig())
    lam = solver.max_eigenvalue(iterations=400, tol=1e-9)
    n = model.mesh.n_nodes
    free = np.concatenate([~model.constraints.trans_fixed.ravel(), np.repeat(~model.constraints.rot_fixed, 3)])
    # rotations about the director carry no stiffness; drop them from the basis
    K = np.zeros((6 * n, 6 * n))
    h = 1e-7
    for k in np.nonzero(free)[0]:
        e = np.zeros(6 * n)
        e[k] = h
        du, dth = e[:3 * n].reshape(n, 3), e[3 * n:].reshape(n, 3)
        fp, mp = solver._trial_forces(du, dth)
        fm, mm = solver._trial_forces(-du, -dth)
        K[:, k] = np.concatenate([(fp - fm).ravel(), (mp - mm).ravel()]) / (2 * h)
    Kf = K[np.ix_(free, free)]
    Kf = 0.5 * (Kf + Kf.T)
    mdiag = np.concatenate([np.repeat(model.mass, 3), np.repeat(model.inertia, 3)])[free]
    A = Kf / np.sqrt(np.outer(mdiag, mdiag))
    lam_dense = np.linalg.eigvalsh(A).max()
    assert lam == pytest.approx(lam_dense, rel=1e-3)


def test_fixed_step_beyond_critical_blows_up():
    model = _cantilever(n=2)
    solver = Solver(model, SolverConfig())
    dt_crit = solver.critical_time_step()
    solver.state.v[:, 2] = 1e-3 * model.mesh.X[:, 0]
    with pytest.raises(Exception):
        for _ in range(2000):
            solver.step(1.5 * dt_crit)
    stable = Solver(_cantilever(n=2), SolverConfig())
    stable.state.v[:, 2] = 1e-3 * stable.model.mesh.X[:, 0]
    for _ in range(2000):
        stable.step(0.9 * dt_crit)
    assert np.abs(stable.state.x - stable.model.mesh.X).max() < 1e-2


def _strain_energy(solver):
    m, s = solver.model, solver.state
    return float(np.sum(m.wdet_ref * strain_energy(m.materials[0], s.gp.strain)))


def test_cantilever_fundamental_frequency_and_energy():
    L, E, rho, h = 1.0, 1.2e6, 1000.0, 0.1
    model = _cantilever(L)
    solver = Solver(model, SolverConfig(dt_refresh=0))
    # initial velocity in the shape of the static tip-load deflection
    xi = model.mesh.X[:, 0] / L
    shape = xi ** 2 * (3 - xi) / 2
    solver.state.v[:, 2] = 1e-3 * shape
    solver.state.omega[:, 1] = -1e-3 * 3 * xi * (2 - xi) / (2 * L)
    tip = np.argmax(model.mesh.X[:, 0])
    omega1 = 1.875104 ** 2 / L ** 2 * np.sqrt(E * h ** 2 / 12 / rho)
    T1 = 2 * np.pi / omega1
    e0 = solver.kinetic_energy()
    ts, zs, energy = [], [], []
    while solver.state.t < 1.5 * T1:
        solver.step(solver.current_dt())
        ts.append(solver.state.t)
        zs.append(solver.state.x[tip, 2])
        energy.append(solver.kinetic_energy() + _strain_energy(solver))
    zs = np.array(zs)
    crossings = np.array(ts)[1:][np.diff(np.sign(zs)) < 0]
    period = 2 * crossings[0]
    assert period == pytest.approx(T1, rel=0.05)
    assert np.max(np.abs(np.array(energy) - e0)) < 0.02 * e0
