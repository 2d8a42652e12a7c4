import numpy as np
import pytest
from hypothesis import given, strategies as st

from cbshell.geometry import (DegenerateSurface, GaussRule, InvertedElement, ShellMesh,
                              edge_weights, fixed_axis_fiber_frame, interpolate_geometry,
                              lamina_frames, shape_functions, update_fiber_frames,
                              update_fiber_length)
from cbshell.scenarios import CantileverGeometry, cantilever_mesh
from cbshell.tensor import rotation_matrix

coord = st.floats(-1.0, 1.0)


@given(coord, coord)
def test_shape_functions_partition_of_unity(xi, eta):
    N, dN = shape_functions(xi, eta)
    assert N.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(dN.sum(axis=-1), 0.0, atol=1e-12)


def test_shape_functions_are_nodal():
    nodes = [(-1, -1), (1, -1), (1, 1), (-1, 1), (0, -1), (1, 0), (0, 1), (-1, 0), (0, 0)]
    for a, (xi, eta) in enumerate(nodes):
        N, _ = shape_functions(xi, eta)
        np.testing.assert_allclose(N, np.eye(9)[a], atol=1e-14)


def test_gauss_rule_integrates_parent_volume():
    rule = GaussRule.tensor()
    assert rule.n_points == 18
    assert rule.weights.sum() == pytest.approx(8.0)


def _flat_element(L=2.0, h=0.1):
    xs = [(-1, -1), (1, -1), (1, 1), (-1, 1), (0, -1), (1, 0), (0, 1), (-1, 0), (0, 0)]
    x = np.array([[0.5 * L * a, 0.5 * L * b, 0.0] for a, b in xs])
    return x, np.tile([0.0, 0.0, 1.0], (9, 1)), np.full(9, h)


def test_interpolated_jacobian_of_flat_element():
    x, Y, h = _flat_element()
    pos, J = interpolate_geometry(x, Y, h, 0.3, -0.2, 1.0)
    np.testing.assert_allclose(pos, [0.3, -0.2, 0.05])
    np.testing.assert_allclose(J, np.diag([1.0, 1.0, 0.05]), atol=1e-14)


def test_inverted_element_detected():
    x, Y, h = _flat_element()
    with pytest.raises(InvertedElement):
        interpolate_geometry(x, -Y, h, 0.0, 0.0, 0.0)


def test_lamina_frame_is_orthonormal_and_symmetric():
    R = lamina_frames(np.array([1.0, 0.0, 0.0]), np.array([0.3, 1.0, 0.0]))
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-14)
    np.testing.assert_allclose(R[:, 2], [0, 0, 1], atol=1e-14)
    with pytest.raises(DegenerateSurface):
        lamina_frames(np.array([1.0, 0, 0]), np.array([2.0, 0, 0]))


@given(st.floats(0.2, np.pi - 0.2), st.floats(0.0, 2 * np.pi))
def test_lamina_frame_follows_in_plane_rotation(angle, psi):
    # rotating both tangents rotates the frame with them
    Q = rotation_matrix(np.array([0.0, 0.0, psi]))
    g1, g2 = np.array([1.0, 0.0, 0.0]), np.array([np.cos(angle), np.sin(angle), 0.0])
    np.testing.assert_allclose(lamina_frames(Q @ g1, Q @ g2), Q @ lamina_frames(g1, g2), atol=1e-12)


def test_fiber_frame_tracks_full_turn_and_fixed_axis_variant_flips():
    prev = np.eye(3)
    flipped = False
    for k in range(1, 10):
        target = rotation_matrix(np.radians(40.0 * k) * np.array([0.0, 1.0, 0.0]))
        prev = update_fiber_frames(target[:, 2], prev)
        assert np.all(np.sum(prev * target, axis=0) > 0.9)
        fixed = fixed_axis_fiber_frame(target[:, 2]).matrix
        flipped |= bool(np.sum(fixed[:, 1] * target[:, 1]) < 0)
    assert flipped


@given(st.lists(st.tuples(st.floats(-0.7, 0.7), st.floats(-0.7, 0.7), st.floats(-0.7, 0.7)),
                min_size=1, max_size=30))
def test_fiber_frame_stays_orthonormal_with_director(rotvecs):
    R = np.eye(3)
    prev = np.eye(3)
    for r in rotvecs:
        R = rotation_matrix(np.array(r)) @ R
        prev = update_fiber_frames(R[:, 2], prev)
        np.testing.assert_allclose(prev.T @ prev, np.eye(3), atol=1e-10)
        np.testing.assert_allclose(prev[:, 2], R[:, 2], atol=1e-12)


def test_fiber_length_update():
    np.testing.assert_allclose(update_fiber_length([1.0, 2.0], [2.0, 0.5]), [0.5, 4.0])
    np.testing.assert_allclose(update_fiber_length([1.0], [3.0], incompressible=False, lambda3=[0.9]), [0.9])
    with pytest.raises(ValueError):
        update_fiber_length([1.0], [0.0])


def test_edge_weights_sum_to_edge_length():
    mesh = cantilever_mesh(CantileverGeometry(length_m=3.0, width_m=0.7, elements_length=2))
    nodes, w = edge_weights(mesh.X, mesh.conn[1], "right")
    assert w.sum() == pytest.approx(0.7)
    np.testing.assert_allclose(w, 0.7 * np.array([1, 4, 1]) / 6.0)


def test_mesh_validation():
    x, Y, h = _flat_element()
    with pytest.raises(ValueError):
        ShellMesh(x, Y, h, np.array([[0, 1, 2, 3, 4, 5, 6, 7, 7]]))
    with pytest.raises(ValueError):
        ShellMesh(x, Y, -h, np.arange(9)[None])
