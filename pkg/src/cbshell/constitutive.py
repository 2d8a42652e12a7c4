"""The three large-strain stress updates, evaluated per Gauss point.

Technique 1 works in total updated-Lagrangian form: hyperelastic PK2 stress
from the strain measured from the initial configuration, pushed forward to
Cauchy stress.  Technique 2 accumulates PK2 increments from a constant tensor
on top of the previous Cauchy stress and pushes the sum forward.  Technique 3
adds the constant tensor times a linearized strain increment to the previous
stress, with no transformation beyond following the lamina frame as it
rotates relative to the material.

All functions are batched over leading axes.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

import numpy as np

from .kinematics import green_lagrange, incremental_linear_strain, incremental_rotation
from .materials import condense_E33, material_tangent, pk2_stress
from .tensor import det3, push_forward_stress, push_forward_tangent, strain_to_voigt, sym_to_voigt, voigt_to_sym


class Technique(IntEnum):
    TOTAL_HYPERELASTIC = 1
    TOTAL_ACCUMULATED = 2
    INCREMENTAL_LINEARIZED = 3

    @property
    def reference(self):
        return "incremental" if self is Technique.INCREMENTAL_LINEARIZED else "total"


@dataclass
class GaussPointState:
    """Per-Gauss-point history, stacked over all points of a mesh."""

    J_ref_l: np.ndarray             # (P, 3, 3) initial lamina Jacobians
    J_prev: np.ndarray              # (P, 3, 3) previous global Jacobians
    R_prev: np.ndarray              # (P, 3, 3) previous lamina frames (columns)
    sigma: np.ndarray               # (P, 6) Cauchy stress, current lamina axes
    pk2: np.ndarray                 # (P, 6) last PK2 (Technique 1 and 2)
    strain: np.ndarray              # (P, 6) total Green-Lagrange strain (output)
    tangent: Optional[np.ndarray] = None

    @classmethod
    def initial(cls, J_ref, R_ref):
        n = J_ref.shape[0]
        return cls(J_ref_l=J_ref @ R_ref, J_prev=J_ref.copy(), R_prev=R_ref.copy(),
                   sigma=np.zeros((n, 6)), pk2=np.zeros((n, 6)), strain=np.zeros((n, 6)))

    def copy(self):
        return GaussPointState(**{k: (None if v is None else v.copy())
                                  for k, v in self.__dict__.items()})


def technique1_update(F, model, with_tangent=False):
    """Cauchy stress (and optionally spatial tangent) from the total lamina F.

    Returns ``(sigma, S, gamma, tangent)``; ``gamma`` is the (condensed)
    Green-Lagrange strain in engineering Voigt form.
    """
    F = np.asarray(F, dtype=float)
    gamma = strain_to_voigt(green_lagrange(F))
    if model.incompressible:
        E = condense_E33(gamma, 1.0)
        gamma = E.gamma
        ratio = np.ones(F.shape[:-2])
    else:
        E = gamma
        ratio = 1.0 / det3(F)
    S = pk2_stress(model, E)
    sigma = push_forward_stress(F, ratio, S)
    tangent = None
    if with_tangent:
        tangent = push_forward_tangent(F, ratio, material_tangent(model, E))
    return sigma, S, gamma, tangent


def technique2_update(sigma_prev, dgamma, C_const, F_step):
    """Accumulated-PK2 update with a constant tensor.

    ``S = sigma_prev + C : dE`` then ``sigma = F S F^T / det F`` with ``F``
    the step deformation gradient between lamina frames.
    """
    S = np.asarray(sigma_prev, dtype=float) + np.asarray(dgamma, dtype=float) @ np.asarray(C_const).T
    sigma = push_forward_stress(F_step, 1.0 / det3(F_step), S)
    return sigma, S


def rotate_stress_to_new_frame(sigma, R_old, R_new):
    """Re-express a lamina stress given in ``R_old`` axes in ``R_new`` axes."""
    Q = np.swapaxes(R_old, -1, -2) @ R_new
    s = voigt_to_sym(sigma)
    return sym_to_voigt(np.swapaxes(Q, -1, -2) @ s @ Q)


def technique3_update(sigma_prev, e_increment, C_const):
    """Incremental update ``sigma + C : e`` (``sigma_prev`` already in the new axes)."""
    return np.asarray(sigma_prev, dtype=float) + np.asarray(e_increment, dtype=float) @ np.asarray(C_const).T


def update_gauss_points(technique, model, C_const, state, J, R, with_tangent=False):
    """Stress update for one material group; returns a new :class:`GaussPointState`.

    ``J`` and ``R`` are the current global Jacobians and lamina frames.
    """
    J_l = J @ R
    new = GaussPointState(J_ref_l=state.J_ref_l, J_prev=J, R_prev=R,
                          sigma=state.sigma, pk2=state.pk2, strain=state.strain)
    F_tot = np.swapaxes(J_l, -1, -2) @ np.linalg.inv(np.swapaxes(state.J_ref_l, -1, -2))
    if technique is Technique.TOTAL_HYPERELASTIC:
        sigma, S, gamma, tangent = technique1_update(F_tot, model, with_tangent)
        new.sigma, new.pk2, new.strain, new.tangent = sigma, S, gamma, tangent
        return new
    new.strain = strain_to_voigt(green_lagrange(F_tot))
    if technique is Technique.TOTAL_ACCUMULATED:
        J_prev_l = state.J_prev @ state.R_prev
        F_step = np.swapaxes(J_l, -1, -2) @ np.linalg.inv(np.swapaxes(J_prev_l, -1, -2))
        dgamma = strain_to_voigt(green_lagrange(F_step))
        new.sigma, new.pk2 = technique2_update(state.sigma, dgamma, C_const, F_step)
    else:
        e = incremental_linear_strain(state.J_prev, J, R)
        # the old frame is first carried along by the material rotation, so only
        # the frame's motion relative to the material re-expresses the stress
        R_old = incremental_rotation(state.J_prev, J) @ state.R_prev
        rotated = rotate_stress_to_new_frame(state.sigma, R_old, R)
        # frame tilt would leak transverse shear into the lamina normal stress
        rotated[..., 2] = 0.0
        new.sigma = technique3_update(rotated, e, C_const)
    if with_tangent:
        new.tangent = np.broadcast_to(C_const, J.shape[:-2] + (6, 6)).copy()
    return new
