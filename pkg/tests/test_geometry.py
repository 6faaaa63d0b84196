import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conetomo.geometry import (ConvexVertexSet, ball, direction_set, exit_time,
                               householder_frame, is_outflow, lattice_directions,
                               sphere_area, sphere_grid)


def test_ball_boundary_and_normal():
    A = ball([0.5, 0.0], 2.0)
    pts = A.boundary_points(16)
    assert np.allclose(np.linalg.norm(pts - A.center, axis=1), 2.0)
    assert np.all(A.on_boundary(pts))
    assert np.allclose(A.normal(pts), (pts - A.center) / 2.0)


def test_exit_time_ball():
    A = ball([0.0, 0.0], 1.0)
    assert exit_time(A, np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]]))[0] == pytest.approx(1.0)
    assert exit_time(A, np.array([[0.5, 0.0]]), np.array([[-1.0, 0.0]]))[0] == pytest.approx(1.5)


def test_outflow_sign():
    A = ball([0.0, 0.0], 1.0)
    b = np.array([[1.0, 0.0]])
    assert is_outflow(A, b, np.array([[1.0, 0.0]]))[0]
    assert not is_outflow(A, b, np.array([[-1.0, 0.0]]))[0]


def test_ellipsoid_validation():
    with pytest.raises(ValueError):
        ConvexVertexSet([0, 0], [1, 2], "ball")
    with pytest.raises(ValueError):
        ConvexVertexSet([0, 0], [1, -2])
    E = ConvexVertexSet([0, 0], [1.0, 2.0])
    assert E.diameter == 4.0
    assert ConvexVertexSet.from_dict(E.to_dict()).radii.tolist() == [1.0, 2.0]


@pytest.mark.parametrize("n,L", [(2, 8), (3, 8)])
def test_sphere_grid_integrates_polynomials(n, L):
    g = sphere_grid(n, L)
    assert np.allclose(np.linalg.norm(g.nodes, axis=1), 1.0)
    assert g.weights.sum() == pytest.approx(sphere_area(n - 1))
    x = g.nodes[:, 0]
    # int x^2 over S^{n-1} is |S^{n-1}| / n
    assert np.sum(g.weights * x * x) == pytest.approx(sphere_area(n - 1) / n)


@pytest.mark.parametrize("n", [2, 3])
def test_antipodal_index(n):
    g = sphere_grid(n, 6)
    assert np.allclose(g.nodes[g.antipodal_index()], -g.nodes, atol=1e-14)


def test_lattice_directions_closed():
    for n in (2, 3):
        d = direction_set(lattice_directions(n).nodes)
        assert np.allclose(d.nodes[d.antipodal_index()], -d.nodes)


def test_sphere_areas():
    assert sphere_area(0) == 2.0
    assert sphere_area(1) == pytest.approx(2 * np.pi)
    assert sphere_area(2) == pytest.approx(4 * np.pi)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 1e-3))
def test_householder_frame_orthonormal(v):
    beta = np.array(v) / np.linalg.norm(v)
    F = householder_frame(beta)
    assert F.shape == (2, 3)
    assert np.allclose(F @ F.T, np.eye(2), atol=1e-12)
    assert np.allclose(F @ beta, 0.0, atol=1e-12)
