"""Explicit central-difference dynamics of nine-node shells.

Each node carries three translations and a director ``Y`` whose rotation has
two components (about the first two fiber axes).  Nodal forces come from the
virtual work of the Cauchy stress,

    f_a = int sigma grad(N_a) dv,     g_a = int sigma grad(N_a zeta h_a / 2) dv,

where ``g_a`` is conjugate to the director; its moment is ``Y_a x g_a``.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .constitutive import GaussPointState, Technique, update_gauss_points
from .geometry import (DegenerateSurface, ElementBasis, ShellMesh, gauss_jacobians, lamina_frames,
                       nodal_average, shape_functions, update_fiber_frames,
                       update_fiber_length, NODE_XI)
from .materials import LinearElastic, constant_elasticity_tensor, elastic_constants, volume_preserving
from . import kernels
from .tensor import cofactor3, det3, rotate_vectors, voigt_to_sym

log = logging.getLogger(__name__)


class Instability(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# loads

PROFILES = ("linear", "smooth")


@dataclass
class LoadSchedule:
    """Ramp made of segments (start value, end value, duration).

    ``profile="linear"`` interpolates linearly within each segment;
    ``"smooth"`` uses ``tau - sin(2 pi tau) / (2 pi)``, which starts and ends
    each segment with zero rate and so excites fewer free oscillations.
    """

    segments: List[tuple]
    profile: str = "linear"

    def __post_init__(self):
        self.segments = [tuple(float(v) for v in s) for s in self.segments]
        if not self.segments:
            raise ValueError("load schedule needs at least one segment")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}")
        for (a0, a1, d), nxt in zip(self.segments, self.segments[1:] + [None]):
            if d <= 0:
                raise ValueError("segment durations must be positive")
            if nxt is not None and not np.isclose(a1, nxt[0]):
                raise ValueError("load schedule must be continuous")
        self._t = np.concatenate([[0.0], np.cumsum([s[2] for s in self.segments])])
        self._v = np.array([self.segments[0][0]] + [s[1] for s in self.segments])

    @classmethod
    def ramp(cls, peak, duration, hold=0.0, profile="linear"):
        segs = [(0.0, peak, duration)]
        if hold > 0:
            segs.append((peak, peak, hold))
        return cls(segs, profile)

    @property
    def duration(self):
        return float(self._t[-1])

    @property
    def peak(self):
        return float(np.max(np.abs(self._v)))

    @property
    def final(self):
        return float(self._v[-1])

    def value(self, t):
        k = int(np.clip(np.searchsorted(self._t, t, side="right") - 1, 0, len(self.segments) - 1))
        a0, a1, d = self.segments[k]
        tau = min(max((t - self._t[k]) / d, 0.0), 1.0)
        if self.profile == "smooth":
            tau = tau - np.sin(2.0 * np.pi * tau) / (2.0 * np.pi)
        return float(a0 + (a1 - a0) * tau)

    def time_of(self, value):
        """First time the schedule reaches ``value`` (monotone ramps)."""
        for k, (a0, a1, d) in enumerate(self.segments):
            lo, hi = min(a0, a1), max(a0, a1)
            if lo <= value <= hi and a0 != a1:
                frac = (value - a0) / (a1 - a0)
                if self.profile == "smooth":
                    tau = np.linspace(0.0, 1.0, 4001)
                    s = tau - np.sin(2.0 * np.pi * tau) / (2.0 * np.pi)
                    frac = float(np.interp(frac, s, tau))
                return float(self._t[k] + frac * d)
        raise ValueError("value not reached by the schedule")


@dataclass
class SurfacePressure:
    """Follower pressure on a face (``zeta`` = -1, 0 or 1) of some elements.

    Positive pressure pushes along ``g1 x g2`` of the current face.
    """

    elements: Sequence[int]
    schedule: LoadSchedule
    zeta: float = 0.0


@dataclass
class NodalForce:
    """Dead nodal forces: ``vectors`` scaled by the schedule value."""

    nodes: Sequence[int]
    vectors: np.ndarray
    schedule: LoadSchedule


@dataclass
class NodalMoment:
    nodes: Sequence[int]
    vectors: np.ndarray
    schedule: LoadSchedule


@dataclass
class ClosedEndForce:
    """Axial resultant of an end cap, ``p * pi * r_inner^2 * fraction``.

    ``r_inner`` is measured on the current end ring: mean distance of the ring
    nodes from the axis minus half the fiber length.
    """

    nodes: Sequence[int]
    weights: np.ndarray
    axis: np.ndarray
    schedule: LoadSchedule
    fraction: float = 1.0
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))


Load = Union[SurfacePressure, NodalForce, NodalMoment, ClosedEndForce]


# ---------------------------------------------------------------------------
# boundary conditions

@dataclass
class Constraints:
    """Translation masks in global axes and rotation restrictions.

    ``rot_axis[a]`` non-zero restricts the angular velocity of node ``a`` to
    that axis (a symmetry plane normal); ``rot_fixed`` clamps the director.
    """

    trans_fixed: np.ndarray
    rot_fixed: np.ndarray
    rot_axis: np.ndarray

    @classmethod
    def free(cls, n):
        return cls(np.zeros((n, 3), bool), np.zeros(n, bool), np.zeros((n, 3)))

    def clamp(self, nodes):
        self.trans_fixed[nodes] = True
        self.rot_fixed[nodes] = True

    def symmetry(self, nodes, axis):
        """Symmetry plane with global normal ``axis`` (0, 1 or 2)."""
        nodes = np.atleast_1d(np.asarray(nodes, int))
        self.trans_fixed[nodes, axis] = True
        n = np.zeros(3)
        n[axis] = 1.0
        # a node on two planes has no admissible rotation left
        other = np.any(self.rot_axis[nodes] != 0, axis=1) & ~np.all(self.rot_axis[nodes] == n, axis=1)
        self.rot_fixed[nodes[other]] = True
        self.rot_axis[nodes] = n

    def apply(self, v, omega, Y):
        v[self.trans_fixed] = 0.0
        omega -= np.sum(omega * Y, axis=1, keepdims=True) * Y
        ax = np.any(self.rot_axis != 0, axis=1)
        if np.any(ax):
            a = self.rot_axis[ax]
            omega[ax] = np.sum(omega[ax] * a, axis=1, keepdims=True) * a
        omega[self.rot_fixed] = 0.0


# ---------------------------------------------------------------------------
# model and state

@dataclass
class SolverConfig:
    dt: Union[str, float] = "auto"
    safety: float = 0.8
    end_time: float = 1.0
    output_stride: int = 10
    damping: float = 0.0
    dt_refresh: int = 200
    rotary_inertia_scale: float = 1.0

    def __post_init__(self):
        if not (self.dt == "auto" or (isinstance(self.dt, (int, float)) and self.dt > 0)):
            raise ValueError("dt must be 'auto' or positive")
        if not 0 < self.safety <= 1:
            raise ValueError("safety factor must lie in (0, 1]")
        if self.end_time < 0 or self.damping < 0:
            raise ValueError("end time and damping must be non-negative")


@dataclass
class ShellState:
    t: float
    x: np.ndarray
    v: np.ndarray
    Y: np.ndarray
    omega: np.ndarray
    h: np.ndarray
    fiber: np.ndarray
    gp: GaussPointState
    steps: int = 0
    dt_prev: Optional[float] = None

    def copy(self):
        d = {k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}
        d["gp"] = self.gp.copy()
        return ShellState(**d)

    def dofs(self):
        """Five-slot view: translations and rotation rates about e1f, e2f."""
        u = self.v
        w1 = np.sum(self.omega * self.fiber[:, :, 0], axis=1)
        w2 = np.sum(self.omega * self.fiber[:, :, 1], axis=1)
        return np.column_stack([u, w1, w2])


class ShellModel:
    """Mesh, materials, technique, boundary conditions and loads.

    ``materials`` is a list of material models and ``elem_material`` maps
    each element to an index into it (all elements use material 0 by
    default).
    """

    def __init__(self, mesh: ShellMesh, materials, density, technique=Technique.TOTAL_HYPERELASTIC,
                 constraints=None, loads=(), elem_material=None, rotary_inertia_scale=1.0,
                 nu_constant=0.499, compiled=True):
        self.compiled = compiled
        self.mesh = mesh
        self.materials = list(materials) if isinstance(materials, (list, tuple)) else [materials]
        self.density = float(density)
        if self.density <= 0:
            raise ValueError("density must be positive")
        self.technique = Technique(technique)
        self.constraints = constraints or Constraints.free(mesh.n_nodes)
        self.loads = list(loads)
        self.elem_material = (np.zeros(mesh.n_elements, int) if elem_material is None
                              else np.asarray(elem_material, int))
        self.basis = ElementBasis(mesh.rule)
        G = self.basis.rule.n_points
        self.n_gauss = G
        self.conn = mesh.conn
        # Gauss point groups per material
        gp_mat = np.repeat(self.elem_material, G)
        self.groups = [np.nonzero(gp_mat == k)[0] for k in range(len(self.materials))]
        self.C_const = []
        for m in self.materials:
            e_mod, nu = elastic_constants(m, nu_constant)
            self.C_const.append(constant_elasticity_tensor(e_mod, nu, True))
        # compiled stress paths exist where the stress comes from a constant tensor
        self.kernel_tensor = []
        for m, c in zip(self.materials, self.C_const):
            if self.technique is not Technique.TOTAL_HYPERELASTIC:
                self.kernel_tensor.append(c)
            elif isinstance(m, LinearElastic):
                self.kernel_tensor.append(constant_elasticity_tensor(m.E, m.nu, True))
            else:
                self.kernel_tensor.append(None)
        self.nodal_incompressible = np.zeros(mesh.n_nodes, bool)
        for e, row in enumerate(self.conn):
            if volume_preserving(self.materials[self.elem_material[e]]):
                self.nodal_incompressible[row] = True
        self.nu_nodal = np.zeros(mesh.n_nodes)
        for e, row in enumerate(self.conn):
            m = self.materials[self.elem_material[e]]
            self.nu_nodal[row] = getattr(m, "nu", 0.5)

        # reference geometry
        J = self.jacobians(mesh.X, mesh.Y0, mesh.h0)
        self.detJ_ref = det3(J)
        if np.any(self.detJ_ref <= 0):
            raise ValueError("inverted element in the reference configuration")
        self.R_ref = lamina_frames(J[:, 0], J[:, 1])
        self.J_ref = J
        self.wdet_ref = self.detJ_ref * np.tile(self.basis.w, mesh.n_elements)
        xe = mesh.X[self.conn]
        self.G_ref = self._midsurface_metric(xe)
        self.area_ref = np.sqrt(np.linalg.det(self.G_ref))
        self.G_ref_inv = np.linalg.inv(self.G_ref)
        m_in = self.basis.n_inplane
        self._wN_inplane = self.basis.N[:m_in] * self.basis.w_inplane[:, None]

        # lumped mass: row sums of the consistent matrix
        wN = (self.wdet_ref.reshape(-1, G)[:, :, None] * self.basis.N[None]).sum(axis=1)
        self.mass = self.density * np.bincount(self.conn.ravel(), wN.ravel(), minlength=mesh.n_nodes)
        self.element_area = (self.area_ref * self.basis.w_inplane).sum(axis=1)
        spacing = np.sqrt(self.element_area) / 2.0
        ell = np.zeros(mesh.n_nodes)
        for e, row in enumerate(self.conn):
            ell[row] = np.maximum(ell[row], spacing[e])
        self.char_length = float(spacing.min())
        self.inertia = self.mass * np.maximum(mesh.h0 ** 2 / 12.0, rotary_inertia_scale * ell ** 2)

        # d(phi)/d(xi) for the translational shape functions, (G, 3, 9)
        self.dphi = np.zeros((G, 3, 9))
        self.dphi[:, 0] = self.basis.dN[:, 0]
        self.dphi[:, 1] = self.basis.dN[:, 1]

    # -- geometry -----------------------------------------------------------
    def jacobians(self, x, Y, h):
        xe = x[self.conn]
        de = (0.5 * h[:, None] * Y)[self.conn]
        return gauss_jacobians(self.basis, xe, de).reshape(-1, 3, 3)

    def geometry(self, x, Y, h):
        """Jacobians, lamina frames and det J at all Gauss points."""
        if not self.compiled:
            J = self.jacobians(x, Y, h)
            return J, lamina_frames(J[:, 0], J[:, 1]), det3(J)
        P = self.mesh.n_elements * self.n_gauss
        J = np.empty((P, 3, 3))
        R = np.empty((P, 3, 3))
        detJ = np.empty(P)
        b = self.basis
        nmin = kernels.geometry(x, Y, h, self.conn, b.N, b.dN, b.zeta, J, R, detJ)
        if nmin < 1e-12:
            raise DegenerateSurface("degenerate surface tangents")
        return J, R, detJ

    def _midsurface_metric(self, xe):
        m = self.basis.n_inplane
        g1 = np.einsum("ga,eak->egk", self.basis.dN[:m, 0], xe)
        g2 = np.einsum("ga,eak->egk", self.basis.dN[:m, 1], xe)
        g = np.empty(g1.shape[:2] + (2, 2))
        g[..., 0, 0] = np.sum(g1 * g1, -1)
        g[..., 1, 1] = np.sum(g2 * g2, -1)
        g[..., 0, 1] = g[..., 1, 0] = np.sum(g1 * g2, -1)
        return g

    def initial_state(self):
        mesh = self.mesh
        n = mesh.n_nodes
        # fiber frames start from the lamina frames at the nodes
        frames = np.zeros((n, 3, 3))
        for e, row in enumerate(self.conn):
            xe = mesh.X[row]
            _, dn = shape_functions(NODE_XI[:, 0], NODE_XI[:, 1])
            g1 = dn[:, 0] @ xe
            g2 = dn[:, 1] @ xe
            frames[row] = lamina_frames(g1, g2)
        frames = update_fiber_frames(mesh.Y0, frames)
        gp = GaussPointState.initial(self.J_ref, self.R_ref)
        return ShellState(t=0.0, x=mesh.X.copy(), v=np.zeros((n, 3)), Y=mesh.Y0.copy(),
                          omega=np.zeros((n, 3)), h=mesh.h0.copy(), fiber=frames, gp=gp)

    # -- fiber lengths ------------------------------------------------------
    def fiber_lengths(self, x):
        if self.compiled:
            shape = self.area_ref.shape
            stretch, trE = np.empty(shape), np.empty(shape)
            kernels.inplane_stretch(x, self.conn, self.basis.dN[:self.basis.n_inplane],
                                    self.G_ref_inv, self.area_ref, stretch, trE)
        else:
            g = self._midsurface_metric(x[self.conn])
            stretch = np.sqrt(np.linalg.det(g)) / self.area_ref
            trE = 0.5 * (np.einsum("egab,egba->eg", self.G_ref_inv, g) - 2.0)
        s_nodal = self._project(stretch)
        h = update_fiber_length(self.mesh.h0, s_nodal, incompressible=True)
        if not np.all(self.nodal_incompressible):
            # plane-stress E33 from the in-plane Green-Lagrange trace
            trE_n = self._project(trE)
            nu = self.nu_nodal
            E33 = -nu / (1.0 - nu) * trE_n
            lam3 = np.sqrt(np.maximum(1.0 + 2.0 * E33, 1e-12))
            comp = ~self.nodal_incompressible
            h[comp] = update_fiber_length(self.mesh.h0[comp], s_nodal[comp], False, lam3[comp])
        return h

    def _project(self, values):
        if not self.compiled:
            return nodal_average(self.basis, self.conn, self.mesh.n_nodes, values, self.area_ref)
        out = np.empty(self.mesh.n_nodes)
        kernels.nodal_project(self.conn, self._wN_inplane, values, self.area_ref, out)
        return out

    # -- stresses -----------------------------------------------------------
    def stress_update(self, gp, J, R, with_tangent=False):
        """New Gauss-point state for the geometry ``J`` (lamina frames ``R``)."""
        if self.compiled and not with_tangent and all(c is not None for c in self.kernel_tensor):
            out = GaussPointState(gp.J_ref_l, J, R, np.empty_like(gp.sigma), gp.pk2.copy(),
                                  np.empty_like(gp.strain))
            for k, idx in enumerate(self.groups):
                if len(idx) == len(J):
                    kernels.constant_tensor_update(int(self.technique), J, R, gp.J_prev, gp.R_prev,
                                                   gp.J_ref_l, gp.sigma, self.kernel_tensor[k],
                                                   out.sigma, out.pk2, out.strain)
                elif len(idx):
                    sig, pk2, st = out.sigma[idx], out.pk2[idx], out.strain[idx]
                    kernels.constant_tensor_update(int(self.technique), J[idx], R[idx], gp.J_prev[idx],
                                                   gp.R_prev[idx], gp.J_ref_l[idx], gp.sigma[idx],
                                                   self.kernel_tensor[k], sig, pk2, st)
                    out.sigma[idx], out.pk2[idx], out.strain[idx] = sig, pk2, st
            return out
        if len(self.groups) == 1:
            return update_gauss_points(self.technique, self.materials[0], self.C_const[0],
                                       gp, J, R, with_tangent)
        out = gp.copy()
        out.J_prev, out.R_prev = J, R
        if with_tangent:
            out.tangent = np.zeros(J.shape[:1] + (6, 6))
        for k, idx in enumerate(self.groups):
            if len(idx) == 0:
                continue
            sub = GaussPointState(gp.J_ref_l[idx], gp.J_prev[idx], gp.R_prev[idx],
                                  gp.sigma[idx], gp.pk2[idx], gp.strain[idx])
            new = update_gauss_points(self.technique, self.materials[k], self.C_const[k],
                                      sub, J[idx], R[idx], with_tangent)
            out.sigma[idx], out.pk2[idx], out.strain[idx] = new.sigma, new.pk2, new.strain
            if with_tangent:
                out.tangent[idx] = new.tangent
        return out

    def internal_forces(self, J, R, sigma_l, h):
        """Nodal forces and director forces from lamina Cauchy stresses."""
        E, G = self.mesh.n_elements, self.n_gauss
        if self.compiled:
            fe = np.empty((E, 9, 3))
            ge = np.empty((E, 9, 3))
            b = self.basis
            kernels.element_forces(J, R, sigma_l, h, self.conn, b.N, b.dN, b.zeta, b.w, fe, ge)
            n = self.mesh.n_nodes
            f, g = np.empty((n, 3)), np.empty((n, 3))
            kernels.scatter(self.conn, fe, f)
            kernels.scatter(self.conn, ge, g)
            return f, g
        detJ = det3(J)
        if np.any(detJ <= 0):
            raise Instability("inverted element")
        Jinv = np.swapaxes(cofactor3(J), -1, -2) / detJ[:, None, None]
        sig = R @ voigt_to_sym(sigma_l) @ np.swapaxes(R, -1, -2)
        wdet = detJ * np.tile(self.basis.w, E)
        T = (wdet[:, None, None] * sig @ Jinv).reshape(E, G, 3, 3)
        # translational: sum_g T_g @ dphi_g
        fe = np.einsum("egij,gja->eai", T, self.dphi)
        # director: dpsi = [dN0 zeta, dN1 zeta, N] * h_a / 2
        he = 0.5 * h[self.conn]                                    # (E, 9)
        z = self.basis.zeta[:, None]
        A = (np.einsum("egi,ga->eai", T[..., 0], self.basis.dN[:, 0] * z)
             + np.einsum("egi,ga->eai", T[..., 1], self.basis.dN[:, 1] * z)
             + np.einsum("egi,ga->eai", T[..., 2], self.basis.N))
        ge = A * he[:, :, None]
        n = self.mesh.n_nodes
        f = _scatter(self.conn, fe, n)
        g = _scatter(self.conn, ge, n)
        return f, g

    # -- loads --------------------------------------------------------------
    def external_forces(self, x, Y, h, t):
        n = self.mesh.n_nodes
        f = np.zeros((n, 3))
        g = np.zeros((n, 3))
        m = np.zeros((n, 3))
        for load in self.loads:
            if isinstance(load, SurfacePressure):
                p = load.schedule.value(t)
                if p == 0.0:
                    continue
                fa, ga = self.pressure_forces(x, Y, h, load.elements, load.zeta, p)
                f += fa
                g += ga
            elif isinstance(load, NodalForce):
                np.add.at(f, np.asarray(load.nodes), load.schedule.value(t) * np.asarray(load.vectors))
            elif isinstance(load, NodalMoment):
                np.add.at(m, np.asarray(load.nodes), load.schedule.value(t) * np.asarray(load.vectors))
            elif isinstance(load, ClosedEndForce):
                p = load.schedule.value(t)
                nodes = np.asarray(load.nodes)
                ax = np.asarray(load.axis, float) / np.linalg.norm(load.axis)
                rel = x[nodes] - load.origin
                radial = rel - np.outer(rel @ ax, ax)
                r_in = np.mean(np.linalg.norm(radial, axis=1) - 0.5 * h[nodes])
                total = p * np.pi * r_in ** 2 * load.fraction
                w = np.asarray(load.weights, float)
                np.add.at(f, nodes, np.outer(total * w / w.sum(), ax))
            else:
                raise TypeError(f"unknown load {load!r}")
        return f, g, m

    def pressure_forces(self, x, Y, h, elements, zeta, p):
        conn = self.conn[np.asarray(elements)]
        xe = x[conn]
        de = (0.5 * h[:, None] * Y)[conn]
        m = self.basis.n_inplane
        N, dN, w = self.basis.N[:m], self.basis.dN[:m], self.basis.w_inplane
        pos = xe + zeta * de
        g1 = np.einsum("ga,eak->egk", dN[:, 0], pos)
        g2 = np.einsum("ga,eak->egk", dN[:, 1], pos)
        nda = np.cross(g1, g2) * (p * w)[None, :, None]
        fe = np.einsum("ga,egk->eak", N, nda)
        ge = fe * zeta * (0.5 * h[conn])[:, :, None]
        n = self.mesh.n_nodes
        return _scatter(conn, fe, n), _scatter(conn, ge, n)

    # -- diagnostics --------------------------------------------------------
    def volume(self, x, Y, h):
        J = self.jacobians(x, Y, h)
        return float(np.sum(det3(J) * np.tile(self.basis.w, self.mesh.n_elements)))

    @property
    def reference_volume(self):
        return float(self.wdet_ref.sum())


def _scatter(conn, values, n):
    """Sum element-node vectors (E, 9, 3) into nodes (n, 3)."""
    idx = conn.ravel()
    out = np.empty((n, 3))
    vals = values.reshape(-1, 3)
    for k in range(3):
        out[:, k] = np.bincount(idx, vals[:, k], minlength=n)
    return out


# ---------------------------------------------------------------------------
# time integration

class Solver:
    """Central-difference integrator bound to a model.

    Geometry, lamina frames and stresses for the current configuration are
    cached on the solver between steps.
    """

    def __init__(self, model: ShellModel, config: SolverConfig, state: Optional[ShellState] = None):
        self.model = model
        self.config = config
        self.state = state if state is not None else model.initial_state()
        self._refresh_geometry()
        self._power_vec = None
        self.dt = None
        self.dt_history = []

    def _refresh_geometry(self):
        s = self.state
        self.J, self.R, detJ = self.model.geometry(s.x, s.Y, s.h)
        if np.any(detJ <= 0):
            raise Instability("inverted element - reduce dt")

    # -- forces -------------------------------------------------------------
    def accelerations(self, state=None, J=None, R=None, t=None):
        m = self.model
        s = state or self.state
        J = self.J if J is None else J
        R = self.R if R is None else R
        f_int, g_int = m.internal_forces(J, R, s.gp.sigma, s.h)
        f_ext, g_ext, m_ext = m.external_forces(s.x, s.Y, s.h, s.t if t is None else t)
        a = (f_ext - f_int) / m.mass[:, None]
        moment = np.cross(s.Y, g_ext - g_int) + m_ext
        alpha = moment / m.inertia[:, None]
        return a, alpha

    # -- critical time step -------------------------------------------------
    def _trial_forces(self, du, dth):
        """Internal generalized forces after a trial perturbation."""
        m, s = self.model, self.state
        x = s.x + du
        Y = rotate_vectors(s.Y, dth)
        J, R, _ = m.geometry(x, Y, s.h)
        gp = m.stress_update(s.gp, J, R)
        f, g = m.internal_forces(J, R, gp.sigma, s.h)
        return f, np.cross(Y, g)

    def max_eigenvalue(self, iterations=60, tol=1e-4, rng=None):
        """Largest eigenvalue of M^-1 K by power iteration.

        ``K v`` comes from central differences of the internal forces about
        the current state.
        """
        m, s = self.model, self.state
        c = m.constraints
        sq = np.sqrt(np.concatenate([np.repeat(m.mass, 3), np.repeat(m.inertia, 3)]))
        n = m.mesh.n_nodes
        rng = rng or np.random.default_rng(12345)
        z = self._power_vec
        if z is None:
            z = rng.standard_normal(6 * n)

        def project(z):
            u = z[:3 * n].reshape(n, 3).copy()
            th = z[3 * n:].reshape(n, 3).copy()
            c.apply(u, th, s.Y)
            return np.concatenate([u.ravel(), th.ravel()])

        z = project(z)
        z /= np.linalg.norm(z)
        lam_old = 0.0
        lam = 0.0
        for it in range(iterations):
            u = z / sq
            scale = 1e-7 * m.char_length / max(np.abs(u[:3 * n]).max(), 1e-300)
            scale = min(scale, 1e-7 / max(np.abs(u[3 * n:]).max(), 1e-300))
            du = scale * u[:3 * n].reshape(n, 3)
            dth = scale * u[3 * n:].reshape(n, 3)
            fp, mp = self._trial_forces(du, dth)
            fm, mm = self._trial_forces(-du, -dth)
            ku = np.concatenate([(fp - fm).ravel(), (mp - mm).ravel()]) / (2 * scale)
            az = project(ku / sq)
            lam = float(z @ az)
            nz = np.linalg.norm(az)
            if nz == 0:
                break
            z = az / nz
            if it > 3 and abs(lam - lam_old) <= tol * abs(lam):
                break
            lam_old = lam
        self._power_vec = z
        return lam

    def critical_time_step(self, iterations=60):
        lam = self.max_eigenvalue(iterations)
        if not lam > 0:
            raise ValueError("non-positive stiffness estimate")
        return 2.0 / np.sqrt(lam)

    # -- stepping -----------------------------------------------------------
    def step(self, dt):
        m, s, cfg = self.model, self.state, self.config
        dt_avg = 0.5 * dt if s.dt_prev is None else 0.5 * (dt + s.dt_prev)
        if m.compiled:
            f_int, g_int = m.internal_forces(self.J, self.R, s.gp.sigma, s.h)
            f_ext, g_ext, m_ext = m.external_forces(s.x, s.Y, s.h, s.t)
            c = m.constraints
            kernels.nodal_update(dt, dt_avg, cfg.damping, m.mass, m.inertia, f_ext - f_int, g_ext - g_int,
                                 m_ext, m.mesh.X, s.x, s.v, s.Y, s.omega, s.fiber,
                                 c.trans_fixed, c.rot_fixed, c.rot_axis)
            self._finish_step(dt)
            return
        a, alpha = self.accelerations()
        if cfg.damping > 0:
            a -= cfg.damping * s.v
            alpha -= cfg.damping * s.omega
        s.v += dt_avg * a
        s.omega += dt_avg * alpha
        m.constraints.apply(s.v, s.omega, s.Y)
        s.x += dt * s.v
        fixed = m.constraints.trans_fixed
        s.x[fixed] = m.mesh.X[fixed]
        s.Y = rotate_vectors(s.Y, dt * s.omega)
        s.Y /= np.linalg.norm(s.Y, axis=1, keepdims=True)
        s.fiber = update_fiber_frames(s.Y, s.fiber)
        self._finish_step(dt)

    def _finish_step(self, dt):
        m, s = self.model, self.state
        s.h = m.fiber_lengths(s.x)
        self._refresh_geometry()
        s.gp = m.stress_update(s.gp, self.J, self.R)
        s.t += dt
        s.steps += 1
        s.dt_prev = dt
        if not np.all(np.isfinite(s.x)) or np.abs(s.x - m.mesh.X).max() > 1e3 * self._extent():
            raise Instability("instability - reduce dt")

    def _extent(self):
        X = self.model.mesh.X
        return float(np.ptp(X, axis=0).max())

    def current_dt(self):
        cfg = self.config
        if cfg.dt != "auto":
            return float(cfg.dt)
        refresh = cfg.dt_refresh
        if self.dt is None or (refresh and self.state.steps % refresh == 0):
            its = 80 if self.dt is None else 8
            self.dt = cfg.safety * self.critical_time_step(its)
            self.dt_history.append((self.state.t, self.dt))
        return self.dt

    def run(self, end_time=None, probes=None, stride=None, callback=None):
        """Advance to ``end_time``; returns a dict of probe histories."""
        cfg = self.config
        end = cfg.end_time if end_time is None else end_time
        stride = cfg.output_stride if stride is None else stride
        probes = probes or {}
        hist = {"time_s": []}
        hist.update({k: [] for k in probes})

        def record():
            hist["time_s"].append(self.state.t)
            for k, fn in probes.items():
                hist[k].append(fn(self))

        record()
        try:
            while self.state.t < end - 1e-12 * max(end, 1.0):
                dt = min(self.current_dt(), end - self.state.t)
                self.step(dt)
                if self.state.steps % stride == 0 or self.state.t >= end - 1e-12 * max(end, 1.0):
                    record()
                if callback is not None:
                    callback(self)
        except Exception as exc:
            # keep what was recorded so callers can report a partial run
            exc.history = {k: np.asarray(v) for k, v in hist.items()}
            raise
        return {k: np.asarray(v) for k, v in hist.items()}

    # -- energies -----------------------------------------------------------
    def kinetic_energy(self):
        m, s = self.model, self.state
        return 0.5 * float(np.sum(m.mass * np.sum(s.v ** 2, 1)) + np.sum(m.inertia * np.sum(s.omega ** 2, 1)))

    def volume(self):
        s = self.state
        return self.model.volume(s.x, s.Y, s.h)

    def volume_change_percent(self):
        v0 = self.model.reference_volume
        return 100.0 * (self.volume() - v0) / v0
