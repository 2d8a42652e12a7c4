"""Nine-node degenerated shell geometry: shape functions, frames, Jacobians.

Jacobians use the row convention ``J[i, :] = dx/dxi_i`` with
``xi = (xi, eta, zeta)``, so the deformation gradient between two
configurations is ``F = J_cur^T J_ref^-T``.

The mid-surface map is ``x = sum_a N_a (xbar_a + zeta * h_a / 2 * Y_a)``
with biquadratic Lagrange ``N_a`` and zeta in [-1, 1] through the thickness.
"""

from dataclasses import dataclass, field

import numpy as np

from .tensor import det3, normalize

# parent coordinates: corners, mid-edges, centre
NODE_XI = np.array([
    [-1, -1], [1, -1], [1, 1], [-1, 1],
    [0, -1], [1, 0], [0, 1], [-1, 0],
    [0, 0],
], dtype=float)

# element sides as (corner, mid, corner) local node triples
SIDES = {
    "bottom": (0, 4, 1),   # eta = -1
    "right": (1, 5, 2),    # xi = +1
    "top": (3, 6, 2),      # eta = +1
    "left": (0, 7, 3),     # xi = -1
}


class InvertedElement(ValueError):
    pass


class DegenerateSurface(ValueError):
    pass


def _lagrange1d(t):
    t = np.asarray(t, dtype=float)
    return np.stack([0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)], axis=-1)


def _lagrange1d_deriv(t):
    t = np.asarray(t, dtype=float)
    return np.stack([t - 0.5, -2.0 * t, t + 0.5], axis=-1)


# map each node to its (xi, eta) 1D basis index
_IDX = ((NODE_XI + 1).astype(int))


def shape_functions(xi, eta):
    """Return ``N`` of shape (..., 9) and ``dN`` of shape (..., 2, 9)."""
    lx, ly = _lagrange1d(xi), _lagrange1d(eta)
    dx, dy = _lagrange1d_deriv(xi), _lagrange1d_deriv(eta)
    ix, iy = _IDX[:, 0], _IDX[:, 1]
    n = lx[..., ix] * ly[..., iy]
    dn = np.stack([dx[..., ix] * ly[..., iy], lx[..., ix] * dy[..., iy]], axis=-2)
    return n, dn


@dataclass(frozen=True)
class GaussRule:
    """Tensor-product Gauss rule; ``points`` columns are (xi, eta, zeta)."""

    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def tensor(cls, n_inplane=3, n_thickness=2):
        a, wa = np.polynomial.legendre.leggauss(n_inplane)
        b, wb = np.polynomial.legendre.leggauss(n_thickness)
        pts, wts = [], []
        for k, zeta in enumerate(b):
            for j, eta in enumerate(a):
                for i, xi in enumerate(a):
                    pts.append((xi, eta, zeta))
                    wts.append(wa[i] * wa[j] * wb[k])
        return cls(np.array(pts), np.array(wts))

    @property
    def n_points(self):
        return len(self.weights)


@dataclass(frozen=True)
class Frame:
    """Orthonormal right-handed triad."""

    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray

    @classmethod
    def from_matrix(cls, r):
        r = np.asarray(r, dtype=float)
        return cls(r[:, 0].copy(), r[:, 1].copy(), r[:, 2].copy())

    @property
    def matrix(self):
        """Columns are the frame vectors (lamina -> global rotation)."""
        return np.column_stack([self.e1, self.e2, self.e3])

    def is_orthonormal(self, tol=1e-10):
        r = self.matrix
        return (np.allclose(r.T @ r, np.eye(3), atol=tol)
                and np.allclose(np.cross(self.e1, self.e2), self.e3, atol=tol))


def lamina_frames(g1, g2, tol=1e-12):
    """Lamina frames from in-plane tangents, batched: returns (..., 3, 3).

    e3 is the unit normal; e1 and e2 sit symmetrically about the bisector of
    the two tangents, so the construction does not favour either direction.
    """
    n = np.cross(g1, g2)
    nn = np.linalg.norm(n, axis=-1, keepdims=True)
    if np.any(nn < tol):
        raise DegenerateSurface("degenerate surface tangents")
    e3 = n / nn
    a = normalize(g1) + normalize(g2)
    a = a / np.linalg.norm(a, axis=-1, keepdims=True)
    b = np.cross(e3, a)
    e1 = (a - b) / np.sqrt(2.0)
    e2 = (a + b) / np.sqrt(2.0)
    return np.stack([e1, e2, e3], axis=-1)


def build_lamina_frame(J):
    """Lamina frame from a single Jacobian (rows are the parent tangents)."""
    J = np.asarray(J, dtype=float)
    return Frame.from_matrix(lamina_frames(J[0], J[1]))


def update_fiber_frames(Y, prev, tol=1e-10):
    """Batched fiber-frame update; ``prev`` is (..., 3, 3) with frame columns.

    e3 follows the director; e2 comes from crossing the director with the
    previous e1 (or the previous e2 when that cross product degenerates),
    which keeps the frame from flipping through large accumulated rotations.
    """
    Y = np.asarray(Y, dtype=float)
    c = np.cross(Y, prev[..., :, 0])
    nc = np.linalg.norm(c, axis=-1, keepdims=True)
    bad = nc[..., 0] < tol
    if np.any(bad):
        c2 = np.cross(prev[..., :, 1], Y)
        nc2 = np.linalg.norm(c2, axis=-1, keepdims=True)
        if np.any(nc2[bad] < tol):
            raise DegenerateSurface("fiber frame update degenerate")
        e1_alt = c2 / np.where(nc2 < tol, 1.0, nc2)
        e2_alt = np.cross(Y, e1_alt)
        e2 = np.where(bad[..., None], e2_alt, c / np.where(nc < tol, 1.0, nc))
    else:
        e2 = c / nc
    e1 = np.cross(e2, Y)
    return np.stack([e1, e2, Y], axis=-1)


def update_fiber_frame(Y_hat, prev_frame):
    return Frame.from_matrix(update_fiber_frames(Y_hat, prev_frame.matrix))


def fixed_axis_fiber_frame(Y_hat, axis=(1.0, 0.0, 0.0)):
    """Fiber frame built against a fixed global axis (the flip-prone variant).

    Kept as a negative control: once the director sweeps past the plane
    normal to ``axis`` the in-plane vectors reverse orientation.
    """
    e2 = normalize(np.cross(Y_hat, axis))
    e1 = np.cross(e2, Y_hat)
    return Frame(e1, e2, np.asarray(Y_hat, dtype=float))


def interpolate_geometry(x, Y, h, xi, eta, zeta):
    """Position and Jacobian at one parent point of one element.

    ``x``, ``Y`` are (9, 3) nodal mid-surface points and directors, ``h`` the
    (9,) fiber lengths.
    """
    x, Y, h = np.asarray(x, float), np.asarray(Y, float), np.asarray(h, float)
    if np.any(h <= 0):
        raise ValueError("fiber lengths must be positive")
    n, dn = shape_functions(xi, eta)
    d = 0.5 * h[:, None] * Y
    pos = n @ (x + zeta * d)
    J = np.empty((3, 3))
    J[0] = dn[0] @ (x + zeta * d)
    J[1] = dn[1] @ (x + zeta * d)
    J[2] = n @ d
    if det3(J) <= 0:
        raise InvertedElement("inverted element")
    return pos, J


@dataclass
class ShellMesh:
    """Node and element data of a nine-node shell mesh.

    Nodal arrays: reference mid-surface points ``X``, directors ``Y0`` and
    fiber lengths ``h0``.  ``conn`` is (n_elem, 9) in the local order of
    :data:`NODE_XI`.
    """

    X: np.ndarray
    Y0: np.ndarray
    h0: np.ndarray
    conn: np.ndarray
    rule: GaussRule = field(default_factory=GaussRule.tensor)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.Y0 = normalize(np.asarray(self.Y0, dtype=float))
        self.h0 = np.asarray(self.h0, dtype=float)
        self.conn = np.asarray(self.conn, dtype=int)
        if np.any(self.h0 <= 0):
            raise ValueError("fiber lengths must be positive")
        if self.conn.ndim != 2 or self.conn.shape[1] != 9:
            raise ValueError("elements need nine nodes")
        if self.conn.min() < 0 or self.conn.max() >= len(self.X):
            raise ValueError("element node index out of range")
        for row in self.conn:
            if len(set(row.tolist())) != 9:
                raise ValueError("element node indices must be distinct")

    @property
    def n_nodes(self):
        return len(self.X)

    @property
    def n_elements(self):
        return len(self.conn)


class ElementBasis:
    """Shape-function tables of a Gauss rule, ready for batched evaluation."""

    def __init__(self, rule):
        self.rule = rule
        p = rule.points
        self.N, self.dN = shape_functions(p[:, 0], p[:, 1])   # (G, 9), (G, 2, 9)
        self.zeta = p[:, 2].copy()
        self.w = rule.weights.copy()
        # the in-plane rule (zeta-independent) is the leading block of points
        inplane = np.isclose(p[:, 2], p[0, 2])
        self.n_inplane = int(inplane.sum())
        self.w_inplane = rule.weights[inplane] / rule.weights[inplane].sum() * 4.0


def gauss_jacobians(basis, xe, de):
    """Jacobians at every Gauss point of every element.

    ``xe``: (E, 9, 3) nodal mid-surface points; ``de``: (E, 9, 3) half-fiber
    vectors ``h/2 * Y``.  Returns (E, G, 3, 3).
    """
    z = basis.zeta[None, :, None]
    g1 = np.einsum("ga,eak->egk", basis.dN[:, 0], xe) + z * np.einsum("ga,eak->egk", basis.dN[:, 0], de)
    g2 = np.einsum("ga,eak->egk", basis.dN[:, 1], xe) + z * np.einsum("ga,eak->egk", basis.dN[:, 1], de)
    g3 = np.einsum("ga,eak->egk", basis.N, de)
    return np.stack([g1, g2, g3], axis=-2)


def midsurface_area_factor(basis, xe):
    """|g1 x g2| of the mid-surface at the in-plane Gauss points, (E, Gp)."""
    m = basis.n_inplane
    g1 = np.einsum("ga,eak->egk", basis.dN[:m, 0], xe)
    g2 = np.einsum("ga,eak->egk", basis.dN[:m, 1], xe)
    return np.linalg.norm(np.cross(g1, g2), axis=-1)


def nodal_average(basis, conn, n_nodes, values, area):
    """Area-weighted projection of in-plane Gauss values onto nodes.

    ``values`` and ``area`` are (E, Gp); returns (n_nodes,).
    """
    m = basis.n_inplane
    wN = basis.N[:m] * basis.w_inplane[:, None]                  # (Gp, 9)
    num = np.einsum("ga,eg->ea", wN, values * area)
    den = np.einsum("ga,eg->ea", wN, area)
    tot_n = np.bincount(conn.ravel(), num.ravel(), minlength=n_nodes)
    tot_d = np.bincount(conn.ravel(), den.ravel(), minlength=n_nodes)
    return tot_n / tot_d


def update_fiber_length(h0, area_stretch, incompressible=True, lambda3=None):
    """New fiber length from the nodal in-plane area stretch ``lambda1*lambda2``.

    Incompressible materials conserve volume, ``h = h0 / (lambda1 lambda2)``;
    compressible ones take the through-thickness stretch ``lambda3``.
    """
    area_stretch = np.asarray(area_stretch, dtype=float)
    if np.any(area_stretch <= 0):
        raise ValueError("non-positive stretch")
    if incompressible:
        return np.asarray(h0, dtype=float) / area_stretch
    if lambda3 is None:
        raise ValueError("compressible update needs the thickness stretch")
    lambda3 = np.asarray(lambda3, dtype=float)
    if np.any(lambda3 <= 0):
        raise ValueError("non-positive stretch")
    return np.asarray(h0, dtype=float) * lambda3


def edge_weights(X, conn_row, side, n_gauss=4):
    """Consistent weights ``int N_a ds`` of one element side (reference)."""
    loc = SIDES[side]
    pts = np.asarray(X, dtype=float)[[conn_row[i] for i in loc]]
    t, w = np.polynomial.legendre.leggauss(n_gauss)
    L, dL = _lagrange1d(t), _lagrange1d_deriv(t)
    tangent = dL @ pts
    ds = np.linalg.norm(tangent, axis=-1)
    weights = (L * (w * ds)[:, None]).sum(axis=0)
    return [conn_row[i] for i in loc], weights
