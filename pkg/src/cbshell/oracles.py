"""Analytical reference solutions used to check the finite-element runs.

These are written from closed-form principal-stretch stresses and do not
call into the material module, so they serve as independent oracles.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .materials import Guccione2D, Guccione3D, LinearElastic, MooneyRivlin


class OracleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# elastica

def oracle_elastica(M, EI, L):
    """Tip displacement of a cantilever bent by an end moment.

    The beam curls into a circular arc of curvature ``k = M / EI``.  Returns
    ``(axial, transverse)``; both vanish as ``M -> 0``.
    """
    if not (EI > 0 and L > 0):
        raise ValueError("EI and L must be positive")
    k = M / EI
    kL = k * L
    if kL == 0.0:
        return 0.0, 0.0
    # cancellation-free forms of sin(kL)/k - L and (1 - cos kL)/k
    half = 0.5 * kL
    transverse = L * np.sin(half) * np.sinc(half / np.pi)
    if abs(kL) < 1e-3:
        axial = L * (-kL ** 2 / 6.0 + kL ** 4 / 120.0)
    else:
        axial = np.sin(kL) / k - L
    return axial, transverse


# ---------------------------------------------------------------------------
# principal-stretch stresses of the incompressible models

def stress_differences(model, lam):
    """``sigma_i - sigma_3`` for principal stretches ``lam = (l1, l2, l3)``.

    Material axis 1 is the fiber (Guccione) axis and axis 3 the one whose
    stress the caller eliminates.  The hydrostatic part is left out.
    """
    l1, l2, l3 = (np.asarray(v, dtype=float) for v in lam)
    if isinstance(model, MooneyRivlin):
        def s(li):
            return 2.0 * model.C1 * li ** 2 - 2.0 * model.C2 / li ** 2
        return s(l1) - s(l3), s(l2) - s(l3)
    if isinstance(model, (Guccione3D, Guccione2D)):
        e1, e2, e3 = 0.5 * (l1 ** 2 - 1), 0.5 * (l2 ** 2 - 1), 0.5 * (l3 ** 2 - 1)
        Q = model.C2 * e1 ** 2 + model.C3 * (e2 ** 2 + e3 ** 2)
        f = model.C1 * np.exp(Q)
        t1 = l1 ** 2 * f * model.C2 * e1
        t2 = l2 ** 2 * f * model.C3 * e2
        t3 = l3 ** 2 * f * model.C3 * e3
        return t1 - t3, t2 - t3
    raise TypeError(f"no closed-form incompressible stresses for {model!r}")


# ---------------------------------------------------------------------------
# biaxial material point

def oracle_biaxial_point(model, lam1, lam2, h0=1.0):
    """Membrane tensions ``T = S h0`` of a sheet stretched by ``lam1, lam2``.

    Incompressible models take ``lam3 = 1 / (lam1 lam2)`` and zero normal
    stress, so ``S_i = (sigma_i - sigma_3) / lam_i^2``.
    """
    lam1 = np.asarray(lam1, dtype=float)
    lam2 = np.asarray(lam2, dtype=float)
    if isinstance(model, LinearElastic):
        e1, e2 = 0.5 * (lam1 ** 2 - 1), 0.5 * (lam2 ** 2 - 1)
        f = model.E / (1 - model.nu ** 2)
        return f * (e1 + model.nu * e2) * h0, f * (e2 + model.nu * e1) * h0
    lam3 = 1.0 / (lam1 * lam2)
    d1, d2 = stress_differences(model, (lam1, lam2, lam3))
    return d1 / lam1 ** 2 * h0, d2 / lam2 ** 2 * h0


# ---------------------------------------------------------------------------
# thick-walled cylinder

@dataclass
class CylinderSolution:
    """Inflated closed-end tube; stress profiles sampled across the wall."""

    pressure: float
    r_inner: float
    r_outer: float
    lambda_z: float
    r: np.ndarray
    sigma_rr: np.ndarray
    sigma_tt: np.ndarray
    sigma_zz: np.ndarray

    model: object = None
    R_inner: float = 0.0
    R_outer: float = 0.0

    def radial_stress(self, R):
        """sigma_rr at reference radius ``R`` by direct quadrature."""
        r_of = _wall_map(self.r_inner, self.lambda_z, self.R_inner)
        g = lambda s: (_differences(self.model, s, r_of(s), self.lambda_z)[0]
                       * s / (self.lambda_z * r_of(s) ** 2))
        return -self.pressure + integrate.quad(g, self.R_inner, R, epsrel=1e-10, epsabs=0)[0]

    def axial_force(self):
        """``int 2 pi r sigma_zz dr`` over the deformed wall (nested quadrature)."""
        r_of = _wall_map(self.r_inner, self.lambda_z, self.R_inner)

        def f(R):
            r = r_of(R)
            dz = _differences(self.model, R, r, self.lambda_z)[1]
            return 2 * np.pi * r * (self.radial_stress(R) + dz) * R / (self.lambda_z * r)

        return integrate.quad(f, self.R_inner, self.R_outer, epsrel=1e-10, epsabs=0)[0]


def _wall_map(r_i, lam_z, R_i):
    def r_of(R):
        return np.sqrt(r_i ** 2 + (R ** 2 - R_i ** 2) / lam_z)
    return r_of


def _differences(model, R, r, lam_z):
    """(sigma_tt - sigma_rr, sigma_zz - sigma_rr) at reference radius R.

    Material axes: 1 = circumferential, 2 = axial, 3 = radial.
    """
    lt = r / R
    lr = 1.0 / (lt * lam_z)
    return stress_differences(model, (lt, lam_z, lr))


def _residuals(model, P, r_i, lam_z, R_i, R_o, tol):
    r_of = _wall_map(r_i, lam_z, R_i)

    def jac(R):
        return R / (lam_z * r_of(R))

    def g1(R):
        r = r_of(R)
        return _differences(model, R, r, lam_z)[0] / r * jac(R)

    def g2(R):
        r = r_of(R)
        dt, dz = _differences(model, R, r, lam_z)
        return r * (2.0 * dz - dt) * jac(R)

    f1 = integrate.quad(g1, R_i, R_o, epsrel=tol, epsabs=0, limit=200)[0] - P
    # f2 vanishes at the solution, so it needs an absolute floor
    f2 = integrate.quad(g2, R_i, R_o, epsrel=tol, epsabs=1e-4 * tol * abs(P) * R_i ** 2, limit=200)[0]
    return f1, f2


def oracle_cylinder_inflation(model, r_i0, r_o0, P, n_points=41, guess=None, quad_tol=1e-8,
                              residual_tol=1e-10):
    """Closed-end, free-extension inflation of an incompressible tube.

    Unknowns are the inner radius and the axial stretch.  The radial
    equilibrium integral must equal the pressure, and the closed-end axial
    balance ``int 2 pi r sigma_zz dr = P pi r_i^2`` is used in the equivalent
    form ``int r (2 (s_zz - s_rr) - (s_tt - s_rr)) dr = 0``.
    """
    if not getattr(model, "incompressible", False) and not isinstance(model, Guccione2D):
        raise TypeError("the cylinder oracle needs an incompressible model")
    if not 0 < r_i0 < r_o0:
        raise ValueError("need 0 < r_i0 < r_o0")
    scale = max(abs(P), 1e-300)
    if P == 0:
        r_i, lam_z = r_i0, 1.0
    else:
        x0 = np.zeros(2) if guess is None else np.log([guess[0] / r_i0, guess[1]])

        def fun(x):
            f1, f2 = _residuals(model, P, r_i0 * np.exp(x[0]), np.exp(x[1]), r_i0, r_o0, quad_tol)
            return [f1 / scale, f2 / (scale * r_i0 ** 2)]

        sol = optimize.root(fun, x0, method="hybr", options={"xtol": 1e-13})
        res = np.max(np.abs(fun(sol.x)))
        if not np.isfinite(res) or res > residual_tol:
            raise OracleError(f"cylinder oracle did not converge (residual {res:.3e})")
        r_i, lam_z = r_i0 * np.exp(sol.x[0]), float(np.exp(sol.x[1]))
    r_of = _wall_map(r_i, lam_z, r_i0)
    R = np.linspace(r_i0, r_o0, n_points)
    r = r_of(R)
    dt = np.empty(n_points)
    dz = np.empty(n_points)
    srr = np.empty(n_points)
    for k, (Rk, rk) in enumerate(zip(R, r)):
        dt[k], dz[k] = _differences(model, Rk, rk, lam_z)
        if k == 0:
            srr[k] = -P
        else:
            inc = integrate.quad(lambda s: _differences(model, s, r_of(s), lam_z)[0]
                                 * s / (lam_z * r_of(s) ** 2), R[k - 1], Rk, epsrel=quad_tol, epsabs=0)[0]
            srr[k] = srr[k - 1] + inc
    return CylinderSolution(float(P), float(r_i), float(r[-1]), lam_z, r, srr, srr + dt, srr + dz,
                            model, r_i0, r_o0)


def cylinder_curve(model, r_i0, r_o0, pressures):
    """Inner radius and axial stretch along a pressure sweep (continuation)."""
    out_r, out_l = [], []
    guess = None
    for P in pressures:
        s = oracle_cylinder_inflation(model, r_i0, r_o0, P, n_points=3, guess=guess)
        guess = (s.r_inner, s.lambda_z)
        out_r.append(s.r_inner)
        out_l.append(s.lambda_z)
    return np.array(out_r), np.array(out_l)


# ---------------------------------------------------------------------------
# derived outputs

def pressure_band(sigma):
    """``-(s_xx + s_yy + s_zz) / 3``; accepts a 3x3 tensor or a Voigt vector."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape[-2:] == (3, 3):
        return -np.trace(sigma, axis1=-2, axis2=-1) / 3.0
    return -(sigma[..., 0] + sigma[..., 1] + sigma[..., 2]) / 3.0


def volume_change(solver):
    """Percent change of the Gauss-integrated volume."""
    return solver.volume_change_percent()
