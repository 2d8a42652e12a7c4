"""Deformation measures in lamina coordinates."""

from dataclasses import dataclass

import numpy as np

from .tensor import det3, inv3, strain_to_voigt


def to_lamina(J, R):
    """Express Jacobian rows (global vectors) in the lamina frame ``R``."""
    return J @ R


def deformation_gradient_lamina(J_cur, J_ref):
    """``F = J_cur^T J_ref^-T`` for lamina-frame Jacobians (batched)."""
    J_cur = np.asarray(J_cur, dtype=float)
    return np.swapaxes(J_cur, -1, -2) @ np.swapaxes(inv3(J_ref), -1, -2)


def right_cauchy_green(F):
    return np.swapaxes(F, -1, -2) @ F


def left_cauchy_green(F):
    return F @ np.swapaxes(F, -1, -2)


def green_lagrange(F):
    """Green-Lagrange strain ``(F^T F - I) / 2`` as a 3x3 tensor."""
    return 0.5 * (right_cauchy_green(np.asarray(F, dtype=float)) - np.eye(3))


def almansi(F):
    """Almansi strain ``(I - (F F^T)^-1) / 2`` as a 3x3 tensor."""
    return 0.5 * (np.eye(3) - inv3(left_cauchy_green(np.asarray(F, dtype=float))))


@dataclass
class LaminaDeformation:
    """Bundle of lamina strain measures for one configuration pair."""

    F: np.ndarray
    reference: str = "initial"

    @property
    def C(self):
        return right_cauchy_green(self.F)

    @property
    def B(self):
        return left_cauchy_green(self.F)

    @property
    def E(self):
        return green_lagrange(self.F)

    @property
    def E_voigt(self):
        return strain_to_voigt(self.E)

    @property
    def det(self):
        return det3(self.F)


def incremental_linear_strain(J_prev, J_cur, R_cur):
    """Linearized strain increment in lamina axes (engineering-shear Voigt).

    The increment ``du`` maps the previous Jacobian to the current one; its
    gradient is taken with respect to current coordinates,
    ``grad du = J_cur^-1 (J_cur - J_prev)`` (rows index the derivative), and
    the symmetric part is rotated into the lamina frame ``R_cur``.
    """
    J_cur = np.asarray(J_cur, dtype=float)
    D = inv3(J_cur) @ (J_cur - np.asarray(J_prev, dtype=float))
    e = 0.5 * (D + np.swapaxes(D, -1, -2))
    e_l = np.swapaxes(R_cur, -1, -2) @ e @ R_cur
    return strain_to_voigt(e_l)


def incremental_rotation(J_prev, J_cur):
    """Material rotation over a step from the spin of the displacement increment.

    ``W = skew(grad du)`` with the gradient taken on the current geometry, and
    the rotation is the Cayley map ``(I - W/2)^-1 (I + W/2)``, which is exactly
    orthogonal for any increment.
    """
    J_cur = np.asarray(J_cur, dtype=float)
    G = np.swapaxes(inv3(J_cur) @ (J_cur - np.asarray(J_prev, dtype=float)), -1, -2)
    W = 0.5 * (G - np.swapaxes(G, -1, -2))
    eye = np.eye(3)
    return np.linalg.solve(eye - 0.5 * W, eye + 0.5 * W)
