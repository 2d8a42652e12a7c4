"""Compiled per-step kernels for the explicit solver.

These mirror the batched numpy routines in :mod:`cbshell.geometry`,
:mod:`cbshell.constitutive` and :mod:`cbshell.dynamics` and are checked
against them in the test suite.  Element loops run in parallel; nodal
assembly is a sequential reduction so results do not depend on the thread
count.
"""

import math

import numpy as np
from numba import config, njit, prange

# the work-queue layer is always available and keeps results independent of
# the host's TBB/OpenMP installation
config.THREADING_LAYER = "workqueue"

SQRT_HALF = math.sqrt(0.5)


@njit(cache=True, inline="always")
def _cross(a0, a1, a2, b0, b1, b2):
    return a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0


@njit(cache=True)
def _inv3(A, out):
    c00 = A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1]
    c01 = A[1, 2] * A[2, 0] - A[1, 0] * A[2, 2]
    c02 = A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]
    det = A[0, 0] * c00 + A[0, 1] * c01 + A[0, 2] * c02
    inv = 1.0 / det
    out[0, 0] = c00 * inv
    out[1, 0] = c01 * inv
    out[2, 0] = c02 * inv
    out[0, 1] = (A[0, 2] * A[2, 1] - A[0, 1] * A[2, 2]) * inv
    out[1, 1] = (A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]) * inv
    out[2, 1] = (A[0, 1] * A[2, 0] - A[0, 0] * A[2, 1]) * inv
    out[0, 2] = (A[0, 1] * A[1, 2] - A[0, 2] * A[1, 1]) * inv
    out[1, 2] = (A[0, 2] * A[1, 0] - A[0, 0] * A[1, 2]) * inv
    out[2, 2] = (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]) * inv
    return det


@njit(cache=True, parallel=True)
def geometry(x, Y, h, conn, N, dN, zeta, J, R, detJ):
    """Gauss-point Jacobians (rows = parent tangents), lamina frames, det J.

    Returns the smallest normal length so the caller can flag degenerate
    surfaces.
    """
    E = conn.shape[0]
    G = N.shape[0]
    nmin = np.empty(E)
    for e in prange(E):
        mn = 1e300
        for g in range(G):
            p = e * G + g
            for k in range(3):
                J[p, 0, k] = 0.0
                J[p, 1, k] = 0.0
                J[p, 2, k] = 0.0
            z = zeta[g]
            for a in range(9):
                n = conn[e, a]
                hd = 0.5 * h[n]
                for k in range(3):
                    d = hd * Y[n, k]
                    J[p, 0, k] += dN[g, 0, a] * (x[n, k] + z * d)
                    J[p, 1, k] += dN[g, 1, a] * (x[n, k] + z * d)
                    J[p, 2, k] += N[g, a] * d
            g10, g11, g12 = J[p, 0, 0], J[p, 0, 1], J[p, 0, 2]
            g20, g21, g22 = J[p, 1, 0], J[p, 1, 1], J[p, 1, 2]
            n0, n1, n2 = _cross(g10, g11, g12, g20, g21, g22)
            nn = math.sqrt(n0 * n0 + n1 * n1 + n2 * n2)
            detJ[p] = n0 * J[p, 2, 0] + n1 * J[p, 2, 1] + n2 * J[p, 2, 2]
            if nn < mn:
                mn = nn
            if nn == 0.0:
                continue
            n0 /= nn
            n1 /= nn
            n2 /= nn
            l1 = math.sqrt(g10 * g10 + g11 * g11 + g12 * g12)
            l2 = math.sqrt(g20 * g20 + g21 * g21 + g22 * g22)
            a0 = g10 / l1 + g20 / l2
            a1 = g11 / l1 + g21 / l2
            a2 = g12 / l1 + g22 / l2
            la = math.sqrt(a0 * a0 + a1 * a1 + a2 * a2)
            a0 /= la
            a1 /= la
            a2 /= la
            b0, b1, b2 = _cross(n0, n1, n2, a0, a1, a2)
            R[p, 0, 0] = (a0 - b0) * SQRT_HALF
            R[p, 1, 0] = (a1 - b1) * SQRT_HALF
            R[p, 2, 0] = (a2 - b2) * SQRT_HALF
            R[p, 0, 1] = (a0 + b0) * SQRT_HALF
            R[p, 1, 1] = (a1 + b1) * SQRT_HALF
            R[p, 2, 1] = (a2 + b2) * SQRT_HALF
            R[p, 0, 2] = n0
            R[p, 1, 2] = n1
            R[p, 2, 2] = n2
        nmin[e] = mn
    return nmin.min()


@njit(cache=True, parallel=True)
def element_forces(J, R, sigma, h, conn, N, dN, zeta, w, fe, ge):
    """Element translational and director forces, (E, 9, 3) each."""
    E = conn.shape[0]
    G = N.shape[0]
    for e in prange(E):
        Jinv = np.empty((3, 3))
        s = np.empty((3, 3))
        sl = np.empty((3, 3))
        T = np.empty((3, 3))
        for a in range(9):
            for k in range(3):
                fe[e, a, k] = 0.0
                ge[e, a, k] = 0.0
        for g in range(G):
            p = e * G + g
            det = _inv3(J[p], Jinv)
            sv = sigma[p]
            sl[0, 0] = sv[0]
            sl[1, 1] = sv[1]
            sl[2, 2] = sv[2]
            sl[0, 1] = sl[1, 0] = sv[3]
            sl[1, 2] = sl[2, 1] = sv[4]
            sl[0, 2] = sl[2, 0] = sv[5]
            # global stress R sl R^T
            for i in range(3):
                for j in range(3):
                    acc = 0.0
                    for m in range(3):
                        for n in range(3):
                            acc += R[p, i, m] * sl[m, n] * R[p, j, n]
                    s[i, j] = acc
            wd = w[g] * det
            for i in range(3):
                for j in range(3):
                    T[i, j] = wd * (s[i, 0] * Jinv[0, j] + s[i, 1] * Jinv[1, j] + s[i, 2] * Jinv[2, j])
            z = zeta[g]
            for a in range(9):
                d0, d1, nn = dN[g, 0, a], dN[g, 1, a], N[g, a]
                hd = 0.5 * h[conn[e, a]]
                for i in range(3):
                    fe[e, a, i] += T[i, 0] * d0 + T[i, 1] * d1
                    ge[e, a, i] += hd * (z * (T[i, 0] * d0 + T[i, 1] * d1) + T[i, 2] * nn)


@njit(cache=True)
def scatter(conn, fe, out):
    """Deterministic nodal assembly of element vectors."""
    out[:] = 0.0
    for e in range(conn.shape[0]):
        for a in range(9):
            n = conn[e, a]
            for k in range(3):
                out[n, k] += fe[e, a, k]


@njit(cache=True, inline="always")
def _lamina(J, R, out):
    for i in range(3):
        for j in range(3):
            out[i, j] = J[i, 0] * R[0, j] + J[i, 1] * R[1, j] + J[i, 2] * R[2, j]


@njit(cache=True, parallel=True)
def constant_tensor_update(technique, J, R, J_prev, R_prev, J_ref_l, sigma, C, sigma_out, pk2_out, strain_out):
    """Stress update with a constant 6x6 tensor ``C`` (engineering strains).

    Technique 1 here is the St. Venant-Kirchhoff case ``S = C E``.
    """
    P = J.shape[0]
    for p in prange(P):
        Jl = np.empty((3, 3))
        Jpl = np.empty((3, 3))
        inv = np.empty((3, 3))
        F = np.empty((3, 3))
        M = np.empty((3, 3))
        s = np.empty((3, 3))
        gam = np.empty(6)
        sv = np.empty(6)
        _lamina(J[p], R[p], Jl)
        # total strain for output: F = Jl^T J_ref_l^-T
        _inv3(J_ref_l[p], inv)
        for i in range(3):
            for j in range(3):
                F[i, j] = Jl[0, i] * inv[j, 0] + Jl[1, i] * inv[j, 1] + Jl[2, i] * inv[j, 2]
        _green(F, strain_out[p])
        if technique == 1:
            for i in range(6):
                acc = 0.0
                for j in range(6):
                    acc += C[i, j] * strain_out[p, j]
                sv[i] = acc
                pk2_out[p, i] = acc
            _push_forward(F, sv, inv, s, M, sigma_out[p])
        elif technique == 2:
            _lamina(J_prev[p], R_prev[p], Jpl)
            _inv3(Jpl, inv)
            for i in range(3):
                for j in range(3):
                    F[i, j] = Jl[0, i] * inv[j, 0] + Jl[1, i] * inv[j, 1] + Jl[2, i] * inv[j, 2]
            _green(F, gam)
            for i in range(6):
                acc = sigma[p, i]
                for j in range(6):
                    acc += C[i, j] * gam[j]
                sv[i] = acc
                pk2_out[p, i] = acc
            _push_forward(F, sv, inv, s, M, sigma_out[p])
        else:
            # linearized increment grad du = J^-1 (J - J_prev), rotated to lamina axes
            _inv3(J[p], inv)
            for i in range(3):
                for j in range(3):
                    acc = 0.0
                    for k in range(3):
                        acc += inv[i, k] * (J[p, k, j] - J_prev[p, k, j])
                    M[i, j] = acc
            for i in range(3):
                for j in range(3):
                    s[i, j] = 0.5 * (M[i, j] + M[j, i])
            _rotate(s, R[p], F)
            gam[0] = F[0, 0]
            gam[1] = F[1, 1]
            gam[2] = F[2, 2]
            gam[3] = 2.0 * F[0, 1]
            gam[4] = 2.0 * F[1, 2]
            gam[5] = 2.0 * F[0, 2]
            # material rotation of the step (Cayley map of the spin W = skew(M^T))
            for i in range(3):
                for j in range(3):
                    w_ij = 0.5 * (M[j, i] - M[i, j])
                    s[i, j] = -0.5 * w_ij
                    Jpl[i, j] = 0.5 * w_ij
                s[i, i] += 1.0
                Jpl[i, i] += 1.0
            _inv3(s, inv)
            for i in range(3):
                for j in range(3):
                    Jl[i, j] = inv[i, 0] * Jpl[0, j] + inv[i, 1] * Jpl[1, j] + inv[i, 2] * Jpl[2, j]
            # previous frame carried by the material, then Q = R_old^T R
            for i in range(3):
                for j in range(3):
                    Jpl[i, j] = Jl[i, 0] * R_prev[p, 0, j] + Jl[i, 1] * R_prev[p, 1, j] + Jl[i, 2] * R_prev[p, 2, j]
            for i in range(3):
                for j in range(3):
                    M[i, j] = Jpl[0, i] * R[p, 0, j] + Jpl[1, i] * R[p, 1, j] + Jpl[2, i] * R[p, 2, j]
            _voigt_sym(sigma[p], s)
            _rotate(s, M, F)
            sv[0] = F[0, 0]
            sv[1] = F[1, 1]
            sv[2] = 0.0
            sv[3] = F[0, 1]
            sv[4] = F[1, 2]
            sv[5] = F[0, 2]
            for i in range(6):
                acc = sv[i]
                for j in range(6):
                    acc += C[i, j] * gam[j]
                sigma_out[p, i] = acc


@njit(cache=True, inline="always")
def _voigt_sym(v, s):
    s[0, 0] = v[0]
    s[1, 1] = v[1]
    s[2, 2] = v[2]
    s[0, 1] = s[1, 0] = v[3]
    s[1, 2] = s[2, 1] = v[4]
    s[0, 2] = s[2, 0] = v[5]


@njit(cache=True, inline="always")
def _rotate(s, Q, out):
    """out = Q^T s Q"""
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for m in range(3):
                for n in range(3):
                    acc += Q[m, i] * s[m, n] * Q[n, j]
            out[i, j] = acc


@njit(cache=True, inline="always")
def _green(F, out):
    """Green-Lagrange strain of F in engineering Voigt form."""
    C = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            C[i, j] = F[0, i] * F[0, j] + F[1, i] * F[1, j] + F[2, i] * F[2, j]
    out[0] = 0.5 * (C[0, 0] - 1.0)
    out[1] = 0.5 * (C[1, 1] - 1.0)
    out[2] = 0.5 * (C[2, 2] - 1.0)
    out[3] = C[0, 1]
    out[4] = C[1, 2]
    out[5] = C[0, 2]


@njit(cache=True)
def inplane_stretch(x, conn, dN, G_inv, area_ref, stretch, trE):
    """Area stretch and in-plane Green-Lagrange trace at in-plane Gauss points."""
    E = conn.shape[0]
    m = dN.shape[0]
    for e in range(E):
        for g in range(m):
            a0 = np.zeros(3)
            a1 = np.zeros(3)
            for a in range(9):
                n = conn[e, a]
                for k in range(3):
                    a0[k] += dN[g, 0, a] * x[n, k]
                    a1[k] += dN[g, 1, a] * x[n, k]
            g00 = a0[0] * a0[0] + a0[1] * a0[1] + a0[2] * a0[2]
            g11 = a1[0] * a1[0] + a1[1] * a1[1] + a1[2] * a1[2]
            g01 = a0[0] * a1[0] + a0[1] * a1[1] + a0[2] * a1[2]
            stretch[e, g] = math.sqrt(g00 * g11 - g01 * g01) / area_ref[e, g]
            Gi = G_inv[e, g]
            trC = Gi[0, 0] * g00 + Gi[1, 1] * g11 + 2.0 * Gi[0, 1] * g01
            trE[e, g] = 0.5 * (trC - 2.0)


@njit(cache=True, inline="always")
def _push_forward(F, sv, work, s, M, out):
    """out = F S F^T / det F in Voigt form."""
    _voigt_sym(sv, s)
    det = _inv3(F, work)
    for i in range(3):
        for j in range(3):
            M[i, j] = F[i, 0] * s[0, j] + F[i, 1] * s[1, j] + F[i, 2] * s[2, j]
    for i in range(3):
        for j in range(i, 3):
            s[i, j] = (M[i, 0] * F[j, 0] + M[i, 1] * F[j, 1] + M[i, 2] * F[j, 2]) / det
    out[0] = s[0, 0]
    out[1] = s[1, 1]
    out[2] = s[2, 2]
    out[3] = s[0, 1]
    out[4] = s[1, 2]
    out[5] = s[0, 2]


@njit(cache=True)
def nodal_update(dt, dt_avg, damping, mass, inertia, f, g, m_ext, X, x, v, Y, omega, fiber,
                 trans_fixed, rot_fixed, rot_axis):
    """Central-difference update of translations, directors and fiber frames.

    ``f`` and ``g`` are net (external minus internal) forces and director
    forces; ``m_ext`` are applied nodal moments.
    """
    n = x.shape[0]
    for a in range(n):
        for k in range(3):
            acc = f[a, k] / mass[a] - damping * v[a, k]
            v[a, k] += dt_avg * acc
            if trans_fixed[a, k]:
                v[a, k] = 0.0
            x[a, k] += dt * v[a, k]
            if trans_fixed[a, k]:
                x[a, k] = X[a, k]
        y0, y1, y2 = Y[a, 0], Y[a, 1], Y[a, 2]
        c0, c1, c2 = _cross(y0, y1, y2, g[a, 0], g[a, 1], g[a, 2])
        w0 = omega[a, 0] + dt_avg * ((c0 + m_ext[a, 0]) / inertia[a] - damping * omega[a, 0])
        w1 = omega[a, 1] + dt_avg * ((c1 + m_ext[a, 1]) / inertia[a] - damping * omega[a, 1])
        w2 = omega[a, 2] + dt_avg * ((c2 + m_ext[a, 2]) / inertia[a] - damping * omega[a, 2])
        # no drilling: remove the component along the director
        wy = w0 * y0 + w1 * y1 + w2 * y2
        w0 -= wy * y0
        w1 -= wy * y1
        w2 -= wy * y2
        r0, r1, r2 = rot_axis[a, 0], rot_axis[a, 1], rot_axis[a, 2]
        if r0 != 0.0 or r1 != 0.0 or r2 != 0.0:
            wr = w0 * r0 + w1 * r1 + w2 * r2
            w0, w1, w2 = wr * r0, wr * r1, wr * r2
        if rot_fixed[a]:
            w0 = w1 = w2 = 0.0
        omega[a, 0], omega[a, 1], omega[a, 2] = w0, w1, w2
        # Rodrigues rotation of the director by omega dt
        t0, t1, t2 = w0 * dt, w1 * dt, w2 * dt
        th = math.sqrt(t0 * t0 + t1 * t1 + t2 * t2)
        if th < 1e-14:
            k0, k1, k2 = _cross(t0, t1, t2, y0, y1, y2)
            z0, z1, z2 = y0 + k0, y1 + k1, y2 + k2
        else:
            u0, u1, u2 = t0 / th, t1 / th, t2 / th
            ct, st = math.cos(th), math.sin(th)
            uy = u0 * y0 + u1 * y1 + u2 * y2
            k0, k1, k2 = _cross(u0, u1, u2, y0, y1, y2)
            z0 = y0 * ct + k0 * st + u0 * uy * (1.0 - ct)
            z1 = y1 * ct + k1 * st + u1 * uy * (1.0 - ct)
            z2 = y2 * ct + k2 * st + u2 * uy * (1.0 - ct)
        ln = math.sqrt(z0 * z0 + z1 * z1 + z2 * z2)
        z0 /= ln
        z1 /= ln
        z2 /= ln
        Y[a, 0], Y[a, 1], Y[a, 2] = z0, z1, z2
        # fiber frame: e2 = Y x e1_prev (fallback e1 = e2_prev x Y)
        e0, e1_, e2_ = _cross(z0, z1, z2, fiber[a, 0, 0], fiber[a, 1, 0], fiber[a, 2, 0])
        ne = math.sqrt(e0 * e0 + e1_ * e1_ + e2_ * e2_)
        if ne >= 1e-10:
            e0 /= ne
            e1_ /= ne
            e2_ /= ne
        else:
            p0, p1, p2 = _cross(fiber[a, 0, 1], fiber[a, 1, 1], fiber[a, 2, 1], z0, z1, z2)
            npp = math.sqrt(p0 * p0 + p1 * p1 + p2 * p2)
            p0 /= npp
            p1 /= npp
            p2 /= npp
            e0, e1_, e2_ = _cross(z0, z1, z2, p0, p1, p2)
        q0, q1, q2 = _cross(e0, e1_, e2_, z0, z1, z2)
        fiber[a, 0, 0], fiber[a, 1, 0], fiber[a, 2, 0] = q0, q1, q2
        fiber[a, 0, 1], fiber[a, 1, 1], fiber[a, 2, 1] = e0, e1_, e2_
        fiber[a, 0, 2], fiber[a, 1, 2], fiber[a, 2, 2] = z0, z1, z2


@njit(cache=True)
def nodal_project(conn, wN, values, area, out):
    """Area-weighted projection of in-plane Gauss values onto nodes."""
    n = out.shape[0]
    den = np.zeros(n)
    out[:] = 0.0
    for e in range(conn.shape[0]):
        for g in range(wN.shape[0]):
            for a in range(9):
                wa = wN[g, a] * area[e, g]
                out[conn[e, a]] += wa * values[e, g]
                den[conn[e, a]] += wa
    for i in range(n):
        out[i] /= den[i]
