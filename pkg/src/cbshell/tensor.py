"""Small dense tensor algebra for lamina-frame stress and tangent transforms.

Voigt ordering is fixed project-wide as (11, 22, 33, 12, 23, 13).  Stress-like
vectors carry tensor shear components; strain-like vectors carry engineering
(doubled) shears, so that ``S = D @ gamma`` with a 6x6 tangent ``D``.

Every function accepts a single 3x3 matrix or a stack ``(..., 3, 3)``.
"""

import numpy as np

VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2))
_VI = np.array([p[0] for p in VOIGT_PAIRS])
_VJ = np.array([p[1] for p in VOIGT_PAIRS])

# full index pair (i, j) -> voigt slot
VOIGT_INDEX = np.empty((3, 3), dtype=int)
for _k, (_i, _j) in enumerate(VOIGT_PAIRS):
    VOIGT_INDEX[_i, _j] = _k
    VOIGT_INDEX[_j, _i] = _k

SINGULAR_TOL = 1e-14


class DegenerateDeformation(ValueError):
    """Raised when a 3x3 map is (numerically) singular."""


def det3(m):
    m = np.asarray(m, dtype=float)
    return (m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
            - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
            + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0]))


def cofactor3(m):
    """Cofactor matrix, ``cof(M) = det(M) M^-T`` (defined for singular M too)."""
    m = np.asarray(m, dtype=float)
    c0, c1, c2 = m[..., :, 0], m[..., :, 1], m[..., :, 2]
    # columns of the cofactor matrix are cross products of the other two columns
    return np.stack([np.cross(c1, c2), np.cross(c2, c0), np.cross(c0, c1)], axis=-1)


def cofactor3_dir(m, dm):
    """Directional derivative of :func:`cofactor3` at ``m`` along ``dm``."""
    a0, a1, a2 = m[..., :, 0], m[..., :, 1], m[..., :, 2]
    d0, d1, d2 = dm[..., :, 0], dm[..., :, 1], dm[..., :, 2]
    return np.stack([np.cross(d1, a2) + np.cross(a1, d2),
                     np.cross(d2, a0) + np.cross(a2, d0),
                     np.cross(d0, a1) + np.cross(a0, d1)], axis=-1)


def inv3(m, tol=SINGULAR_TOL):
    m = np.asarray(m, dtype=float)
    d = det3(m)
    if np.any(np.abs(d) <= tol):
        raise DegenerateDeformation("degenerate deformation gradient")
    return np.swapaxes(cofactor3(m), -1, -2) / d[..., None, None]


def sym_to_voigt(a):
    """Symmetric tensor -> 6-vector with tensor shear components."""
    a = np.asarray(a, dtype=float)
    return a[..., _VI, _VJ]


def voigt_to_sym(v):
    v = np.asarray(v, dtype=float)
    return v[..., VOIGT_INDEX]


def strain_to_voigt(e):
    """Symmetric strain tensor -> 6-vector with engineering shears."""
    v = sym_to_voigt(e).copy()
    v[..., 3:] *= 2.0
    return v


def voigt_to_strain(v):
    v = np.array(v, dtype=float, copy=True)
    v[..., 3:] *= 0.5
    return voigt_to_sym(v)


def tangent_to_full(d):
    """6x6 Voigt tangent -> minor/major symmetric 3x3x3x3 tensor."""
    d = np.asarray(d, dtype=float)
    return d[..., VOIGT_INDEX[:, :, None, None], VOIGT_INDEX[None, None, :, :]]


def full_to_tangent(c):
    c = np.asarray(c, dtype=float)
    return c[..., _VI[:, None], _VJ[:, None], _VI[None, :], _VJ[None, :]]


def _check_inputs(F, density_ratio):
    F = np.asarray(F, dtype=float)
    if np.any(np.abs(det3(F)) <= SINGULAR_TOL):
        raise DegenerateDeformation("degenerate deformation gradient")
    ratio = np.asarray(density_ratio, dtype=float)
    if np.any(ratio <= 0.0):
        raise ValueError("density ratio must be positive")
    return F, ratio


def push_forward_stress(F, density_ratio, S):
    """Cauchy stress ``sigma_sr = ratio * F_si S_ij F_rj`` (Voigt in, Voigt out)."""
    F, ratio = _check_inputs(F, density_ratio)
    s = voigt_to_sym(S)
    sigma = ratio[..., None, None] * (F @ s @ np.swapaxes(F, -1, -2))
    return sym_to_voigt(sigma)


def push_forward_tangent(F, density_ratio, C0):
    """Spatial tangent ``ratio * F_mi F_nj C_ijrs F_pr F_qs`` in Voigt form."""
    F, ratio = _check_inputs(F, density_ratio)
    c = tangent_to_full(C0)
    out = np.einsum("...mi,...nj,...ijrs,...pr,...qs->...mnpq", F, F, c, F, F,
                    optimize=True)
    return ratio[..., None, None] * full_to_tangent(out)


def rotate_sym(a, q):
    """Components of a symmetric tensor in a frame rotated by ``q``: ``q^T a q``."""
    return np.swapaxes(q, -1, -2) @ a @ q


def normalize(v, axis=-1):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=axis, keepdims=True)


def rotation_matrix(rotvec):
    """Rodrigues rotation matrix for rotation vector(s) ``(..., 3)``."""
    rotvec = np.asarray(rotvec, dtype=float)
    theta = np.linalg.norm(rotvec, axis=-1)
    small = theta < 1e-12
    safe = np.where(small, 1.0, theta)
    k = rotvec / safe[..., None]
    kx = np.zeros(rotvec.shape[:-1] + (3, 3))
    kx[..., 0, 1], kx[..., 0, 2] = -k[..., 2], k[..., 1]
    kx[..., 1, 0], kx[..., 1, 2] = k[..., 2], -k[..., 0]
    kx[..., 2, 0], kx[..., 2, 1] = -k[..., 1], k[..., 0]
    s = np.where(small, 0.0, np.sin(theta))[..., None, None]
    c = np.where(small, 0.0, 1.0 - np.cos(theta))[..., None, None]
    return np.eye(3) + s * kx + c * (kx @ kx)


def rotate_vectors(v, rotvec):
    """Rotate vectors ``v`` by rotation vectors ``rotvec`` (Rodrigues formula)."""
    v = np.asarray(v, dtype=float)
    rotvec = np.asarray(rotvec, dtype=float)
    theta = np.linalg.norm(rotvec, axis=-1, keepdims=True)
    small = theta < 1e-14
    k = rotvec / np.where(small, 1.0, theta)
    ct, st = np.cos(theta), np.sin(theta)
    kv = np.sum(k * v, axis=-1, keepdims=True)
    out = v * ct + np.cross(k, v) * st + k * kv * (1.0 - ct)
    return np.where(small, v + np.cross(rotvec, v), out)
