"""Strain-energy models, PK2 stress, material tangent and E33 condensation.

All quantities are in lamina axes and Voigt order (11, 22, 33, 12, 23, 13).
Strains enter as engineering-shear vectors ``gamma``; the stress returned is
``dW/dgamma`` (tensor PK2 components) and the tangent is ``d2W/dgamma2``.

Hyperelastic models marked ``incompressible`` are evaluated on a strain whose
E33 solves ``det(2E + I) = J^2``.  Substituting that E33 into W makes the
stress and tangent free of any 33 contribution, which is the zero normal
stress condition of a shell lamina.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from .tensor import cofactor3, cofactor3_dir, det3, voigt_to_strain, VOIGT_PAIRS

EXP_LIMIT = 700.0


class EnergyOverflow(ArithmeticError):
    pass


class DegenerateInPlane(ValueError):
    pass


@dataclass(frozen=True)
class LinearElastic:
    E: float
    nu: float
    incompressible = False

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError("E must be positive")
        if not 0 <= self.nu < 0.5:
            raise ValueError("nu must lie in [0, 0.5)")


@dataclass(frozen=True)
class MooneyRivlin:
    C1: float
    C2: float
    incompressible = True

    def __post_init__(self):
        if not self.C1 > 0:
            raise ValueError("C1 must be positive")
        if not np.isfinite(self.C2):
            raise ValueError("C2 must be finite")


@dataclass(frozen=True)
class Guccione3D:
    """Exponential fibre model; lamina direction 1 is the fibre axis."""

    C1: float
    C2: float
    C3: float
    C4: float
    incompressible = True

    def __post_init__(self):
        if not self.C1 > 0:
            raise ValueError("C1 must be positive")
        if not all(np.isfinite([self.C2, self.C3, self.C4])):
            raise ValueError("constants must be finite")


@dataclass(frozen=True)
class Guccione2D:
    """Planar exponential model; its Delta term stands in for E33."""

    C1: float
    C2: float
    C3: float
    C4: float
    incompressible = False

    def __post_init__(self):
        if not self.C1 > 0:
            raise ValueError("C1 must be positive")
        if not all(np.isfinite([self.C2, self.C3, self.C4])):
            raise ValueError("constants must be finite")


MaterialModel = Union[LinearElastic, MooneyRivlin, Guccione3D, Guccione2D]


def isotropic_tangent(E_mod, nu):
    if nu >= 0.5:
        raise ValueError("nu = 0.5 gives an infinite bulk term")
    lam = E_mod * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E_mod / (2 * (1 + nu))
    d = np.zeros((6, 6))
    d[:3, :3] = lam
    d[[0, 1, 2], [0, 1, 2]] += 2 * mu
    d[[3, 4, 5], [3, 4, 5]] = mu
    return d


def constant_elasticity_tensor(E_mod, nu, condense_plane_stress=True):
    """Isotropic Hooke tangent, optionally with the 33 direction condensed out."""
    if not E_mod > 0:
        raise ValueError("E must be positive")
    if nu < 0 or nu > 0.5:
        raise ValueError("nu must lie in [0, 0.5)")
    if not condense_plane_stress:
        return isotropic_tangent(E_mod, nu)
    d = np.zeros((6, 6))
    f = E_mod / (1 - nu * nu)
    d[0, 0] = d[1, 1] = f
    d[0, 1] = d[1, 0] = f * nu
    g = E_mod / (2 * (1 + nu))
    d[3, 3] = d[4, 4] = d[5, 5] = g
    return d


def derive_mooney_rivlin_from_elastic(C1, C2, nu=0.499):
    """Small-strain (E, nu) matching Mooney-Rivlin constants, ``mu = 2 (C1 + C2)``."""
    if not C1 + C2 > 0:
        raise ValueError("C1 + C2 must be positive")
    mu = 2.0 * (C1 + C2)
    return 2.0 * mu * (1.0 + nu), nu


# ---------------------------------------------------------------------------
# E33 condensation

@dataclass
class CondensedStrain:
    """Strain with E33 solved from the volume constraint.

    ``gamma`` is the full engineering-shear Voigt strain; ``sens`` holds
    ``dE33/dgamma_J`` (the 33 slot is unused and set to zero).
    """

    gamma: np.ndarray
    sens: np.ndarray
    detF_target: np.ndarray

    @property
    def E33(self):
        return self.gamma[..., 2]


def condense_E33(gamma, detF_target=1.0, tol=1e-14):
    """Solve ``det(2E + I) = J^2`` for E33; the other components are kept."""
    gamma = np.array(gamma, dtype=float, copy=True)
    J = np.broadcast_to(np.asarray(detF_target, dtype=float), gamma.shape[:-1])
    gamma[..., 2] = 0.0
    C = np.eye(3) + 2.0 * voigt_to_strain(gamma)
    C[..., 2, 2] = 0.0
    A = C[..., 0, 0] * C[..., 1, 1] - C[..., 0, 1] ** 2
    if np.any(np.abs(A) < tol):
        raise DegenerateInPlane("degenerate in-plane state")
    B = det3(C)
    C33 = (J * J - B) / A
    gamma[..., 2] = 0.5 * (C33 - 1.0)
    C[..., 2, 2] = C33
    cof = cofactor3(C)
    sens = -cof[..., [p[0] for p in VOIGT_PAIRS], [p[1] for p in VOIGT_PAIRS]] / A[..., None]
    sens[..., 2] = 0.0
    return CondensedStrain(gamma, sens, np.asarray(J))


# ---------------------------------------------------------------------------
# raw (unconstrained) energies and derivatives, functions of the full gamma

def _guccione_q_weights(m):
    # Q = sum_J a_J gamma_J^2 with engineering shears
    return np.array([m.C2, m.C3, m.C3, 0.5 * m.C4, 0.5 * m.C3, 0.5 * m.C4])


def _check_q(Q):
    if np.any(Q > EXP_LIMIT):
        raise EnergyOverflow("energy overflow - reduce load increment")


def _raw_energy(model, gamma):
    if isinstance(model, LinearElastic):
        d = constant_elasticity_tensor(model.E, model.nu, condense_plane_stress=True)
        return 0.5 * np.einsum("...i,ij,...j->...", gamma, d, gamma)
    if isinstance(model, MooneyRivlin):
        C = np.eye(3) + 2.0 * voigt_to_strain(gamma)
        I1 = np.trace(C, axis1=-2, axis2=-1)
        I2 = 0.5 * (I1 ** 2 - np.einsum("...ij,...ji->...", C, C))
        return model.C1 * (I1 - 3.0) + model.C2 * (I2 - 3.0)
    if isinstance(model, Guccione3D):
        Q = np.einsum("...i,i->...", gamma ** 2, _guccione_q_weights(model))
        _check_q(Q)
        return 0.5 * model.C1 * np.expm1(Q)
    if isinstance(model, Guccione2D):
        Q = _guccione2d_q(model, gamma)
        _check_q(Q)
        return 0.5 * model.C1 * np.expm1(Q)
    raise TypeError(f"unknown material {model!r}")


def _guccione2d_q(m, gamma):
    a = 2.0 * gamma[..., 0] + 1.0
    b = 2.0 * gamma[..., 1] + 1.0
    u = 1.0 / (a * b) - 1.0
    return (m.C2 * gamma[..., 0] ** 2
            + m.C3 * (gamma[..., 1] ** 2 + 0.25 * u * u)
            + 0.5 * m.C4 * gamma[..., 3] ** 2)


def _raw_stress_tangent(model, gamma, need_tangent=True):
    """Unconstrained ``dW/dgamma`` and ``d2W/dgamma2``."""
    shape = gamma.shape[:-1]
    if isinstance(model, LinearElastic):
        d = constant_elasticity_tensor(model.E, model.nu, condense_plane_stress=True)
        return gamma @ d.T, np.broadcast_to(d, shape + (6, 6)).copy()
    if isinstance(model, MooneyRivlin):
        C = np.eye(3) + 2.0 * voigt_to_strain(gamma)
        I1 = np.trace(C, axis1=-2, axis2=-1)
        s = np.empty(shape + (6,))
        for k, (i, j) in enumerate(VOIGT_PAIRS):
            delta = 1.0 if i == j else 0.0
            s[..., k] = 2.0 * (model.C1 * delta + model.C2 * (I1 * delta - C[..., i, j]))
        if not need_tangent:
            return s, None
        d = np.zeros((6, 6))
        d[:3, :3] = 4.0 * model.C2
        d -= 4.0 * model.C2 * np.diag([1.0, 1.0, 1.0, 0.5, 0.5, 0.5])
        return s, np.broadcast_to(d, shape + (6, 6)).copy()
    if isinstance(model, Guccione3D):
        a = _guccione_q_weights(model)
        Q = np.einsum("...i,i->...", gamma ** 2, a)
        _check_q(Q)
        eq = model.C1 * np.exp(Q)
        q = a * gamma                                  # half of dQ/dgamma
        s = eq[..., None] * q
        if not need_tangent:
            return s, None
        d = eq[..., None, None] * (2.0 * q[..., :, None] * q[..., None, :] + np.diag(a))
        return s, d
    if isinstance(model, Guccione2D):
        Q = _guccione2d_q(model, gamma)
        _check_q(Q)
        eq = model.C1 * np.exp(Q)
        A = 2.0 * gamma[..., 0] + 1.0
        B = 2.0 * gamma[..., 1] + 1.0
        u = 1.0 / (A * B) - 1.0
        u1 = -2.0 / (A * A * B)
        u2 = -2.0 / (A * B * B)
        q = np.zeros(shape + (6,))                     # half of dQ/dgamma
        q[..., 0] = model.C2 * gamma[..., 0] + 0.25 * model.C3 * u * u1
        q[..., 1] = model.C3 * gamma[..., 1] + 0.25 * model.C3 * u * u2
        q[..., 3] = 0.5 * model.C4 * gamma[..., 3]
        s = eq[..., None] * q
        if not need_tangent:
            return s, None
        h = np.zeros(shape + (6, 6))                   # half of d2Q/dgamma2
        u11 = 8.0 / (A ** 3 * B)
        u12 = 4.0 / (A * A * B * B)
        u22 = 8.0 / (A * B ** 3)
        h[..., 0, 0] = model.C2 + 0.25 * model.C3 * (u1 * u1 + u * u11)
        h[..., 1, 1] = model.C3 + 0.25 * model.C3 * (u2 * u2 + u * u22)
        h[..., 0, 1] = h[..., 1, 0] = 0.25 * model.C3 * (u1 * u2 + u * u12)
        h[..., 3, 3] = 0.5 * model.C4
        d = eq[..., None, None] * (2.0 * q[..., :, None] * q[..., None, :] + h)
        return s, d
    raise TypeError(f"unknown material {model!r}")


# ---------------------------------------------------------------------------
# public constitutive evaluations

def strain_energy(model, E):
    """W at a strain (CondensedStrain or raw Voigt vector)."""
    gamma = E.gamma if isinstance(E, CondensedStrain) else np.asarray(E, dtype=float)
    return _raw_energy(model, gamma)


def _condensed(model, E, detF_target=1.0):
    if isinstance(E, CondensedStrain):
        return E
    gamma = np.asarray(E, dtype=float)
    if model.incompressible:
        return condense_E33(gamma, detF_target)
    return None


def pk2_stress(model, E, detF_target=1.0):
    """Second Piola-Kirchhoff stress (tensor components, Voigt order).

    ``E`` is either a :class:`CondensedStrain` or a raw engineering-shear
    Voigt strain, in which case incompressible models condense it first.
    """
    cs = _condensed(model, E, detF_target)
    if cs is None:
        s, _ = _raw_stress_tangent(model, np.asarray(E, dtype=float), need_tangent=False)
        return s
    s, _ = _raw_stress_tangent(model, cs.gamma, need_tangent=False)
    s = s + s[..., 2:3] * cs.sens
    s[..., 2] = 0.0
    return s


def material_tangent(model, E, detF_target=1.0):
    """Material tangent ``dS/dgamma`` including the chain through E33."""
    cs = _condensed(model, E, detF_target)
    if cs is None:
        _, d = _raw_stress_tangent(model, np.asarray(E, dtype=float))
        return d
    s, d = _raw_stress_tangent(model, cs.gamma)
    g = cs.sens
    out = (d + d[..., :, 2:3] * g[..., None, :] + g[..., :, None] * d[..., 2:3, :]
           + d[..., 2, 2][..., None, None] * g[..., :, None] * g[..., None, :])
    # curvature of the constraint surface: S33 * d2E33/dgamma2
    C = np.eye(3) + 2.0 * voigt_to_strain(cs.gamma)
    cof = cofactor3(C)
    A = cof[..., 2, 2]
    vi = [p[0] for p in VOIGT_PAIRS]
    vj = [p[1] for p in VOIGT_PAIRS]
    dsens = np.zeros(out.shape)
    for k, (i, j) in enumerate(VOIGT_PAIRS):
        if k == 2:
            continue
        dC = np.zeros(C.shape)
        if i == j:
            dC[..., i, i] = 2.0
        else:
            dC[..., i, j] = dC[..., j, i] = 1.0
        dC[..., 2, 2] += 2.0 * g[..., k]
        dcof = cofactor3_dir(C, dC)
        dnum = dcof[..., vi, vj]
        dA = dcof[..., 2, 2]
        # d(-cof_J / A) = -(dcof_J A - cof_J dA) / A^2
        dsens[..., :, k] = -(dnum * A[..., None] - cof[..., vi, vj] * dA[..., None]) / (A * A)[..., None]
    dsens[..., 2, :] = 0.0
    dsens[..., :, 2] = 0.0
    out = out + s[..., 2][..., None, None] * dsens
    out[..., 2, :] = 0.0
    out[..., :, 2] = 0.0
    return out


def small_strain_tangent(model):
    """Tangent at zero strain, for wave speeds and time-step estimates."""
    if isinstance(model, LinearElastic):
        return constant_elasticity_tensor(model.E, model.nu, True)
    return material_tangent(model, np.zeros(6))


def elastic_constants(model, nu=0.499):
    """Small-strain (E, nu) used by the constant-tensor techniques."""
    if isinstance(model, LinearElastic):
        return model.E, model.nu
    if isinstance(model, MooneyRivlin):
        return derive_mooney_rivlin_from_elastic(model.C1, model.C2, nu)
    d = small_strain_tangent(model)
    # isotropic fit to the in-plane block of the condensed tangent
    e_mod = 0.5 * (d[0, 0] + d[1, 1]) * (1 - nu * nu)
    return e_mod, nu


def volume_preserving(model, nu_threshold=0.49):
    """Whether fiber lengths follow the incompressible (volume) rule."""
    if isinstance(model, LinearElastic):
        return model.nu >= nu_threshold
    return True
