"""Shape functions, edge maps, Jacobians and Newton inversion."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvedquad.element import (NODE_COORDS, CurvedTriangle, EdgeParam, edge_point,
                                edge_to_area, in_reference_triangle, interpolate,
                                linear_shape_functions, newton_invert, shape_functions,
                                shape_gradients, surface_jacobian)
from curvedquad.errors import DegenerateElementError, NewtonConvergenceError
from curvedquad.geometry import build_reference_frame
from curvedquad.samples import demo_element, random_element

UNIT = CurvedTriangle.flat([[0, 0, 0], [1, 0, 0], [0, 1, 0]])

reference_points = st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1.0)).map(
    lambda p: (p[0], p[1]) if p[0] + p[1] <= 1.0 else (1.0 - p[0], 1.0 - p[1]))


def test_shape_function_kronecker_examples():
    assert shape_functions(0.0, 0.0).tolist() == [1, 0, 0, 0, 0, 0]
    assert shape_functions(1.0, 0.0).tolist() == [0, 1, 0, 0, 0, 0]
    assert shape_functions(0.5, 0.0).tolist() == [0, 0, 0, 1, 0, 0]


def test_shape_functions_kronecker_at_all_nodes():
    for j, (xi, eta) in enumerate(NODE_COORDS):
        assert shape_functions(xi, eta).tolist() == np.eye(6)[j].tolist()


def test_partition_of_unity_random():
    rng = np.random.default_rng(0)
    xi, eta = rng.uniform(size=(2, 1000))
    flip = xi + eta > 1.0
    xi[flip], eta[flip] = 1.0 - xi[flip], 1.0 - eta[flip]
    assert np.max(np.abs(shape_functions(xi, eta).sum(axis=0) - 1.0)) < 1e-14


def test_gradient_examples():
    dL = shape_gradients(1.0, 0.0)
    assert dL[1, 0] == 3.0
    assert abs(shape_gradients(0.3, 0.6)[:, 0].sum()) < 1e-14
    assert abs(shape_gradients(0.25, 0.25)[:, 1].sum()) < 1e-14


@settings(max_examples=100, deadline=None)
@given(reference_points)
def test_gradients_match_central_differences(p):
    xi, eta = p
    h = 1e-6
    dL = shape_gradients(xi, eta)
    fd_xi = (shape_functions(xi + h, eta) - shape_functions(xi - h, eta)) / (2 * h)
    fd_eta = (shape_functions(xi, eta + h) - shape_functions(xi, eta - h)) / (2 * h)
    assert np.max(np.abs(dL[:, 0] - fd_xi)) < 1e-8
    assert np.max(np.abs(dL[:, 1] - fd_eta)) < 1e-8


def test_linear_shape_functions_sum_to_one():
    L = linear_shape_functions(np.array([0.2, 0.7]), np.array([0.1, 0.3]))
    assert np.allclose(L.sum(axis=0), 1.0, atol=1e-15)


def test_interpolate_reproduces_nodes():
    tri = demo_element()
    assert np.array_equal(interpolate(tri, 0.0, 1.0), tri.nodes[2])
    assert np.array_equal(interpolate(tri, 0.5, 0.5), tri.nodes[4])


def test_interpolate_flat_element_is_affine():
    c = np.array([[0.2, -1.0, 0.5], [2.0, 0.3, 1.0], [-0.5, 1.5, -0.2]])
    tri = CurvedTriangle.flat(c)
    expected = c[0] + 0.3 * (c[1] - c[0]) + 0.3 * (c[2] - c[0])
    assert np.allclose(interpolate(tri, 0.3, 0.3), expected, atol=1e-15)


def test_surface_jacobian_examples():
    J, n = surface_jacobian(UNIT, np.array([0.1, 0.4]), np.array([0.2, 0.5]))
    assert np.allclose(J, 1.0) and np.allclose(n, [0, 0, 1])
    stretched = CurvedTriangle.flat([[0, 0, 0], [2, 0, 0], [0, 1, 0]])
    J, _ = surface_jacobian(stretched, 0.3, 0.3)
    assert J == pytest.approx(2.0)


def test_surface_jacobian_degenerate_raises():
    nodes = UNIT.nodes.copy()
    # fold the element so the tangents vanish at a corner
    nodes[3] = [0.25, 0.0, 0.0]
    nodes[5] = [0.0, 0.25, 0.0]
    with pytest.raises(DegenerateElementError):
        surface_jacobian(CurvedTriangle(nodes), 0.0, 0.0)


def test_collinear_corners_rejected():
    with pytest.raises(DegenerateElementError):
        CurvedTriangle.flat([[0, 0, 0], [1, 1, 1], [2, 2, 2]])
    with pytest.raises(ValueError):
        CurvedTriangle(np.zeros((5, 3)))


def test_edge_point_examples():
    tri = demo_element()
    assert np.array_equal(edge_point(tri, EdgeParam(1, 0.0)), tri.nodes[0])
    assert np.array_equal(edge_point(tri, EdgeParam(2, 1.0)), tri.nodes[2])
    assert np.array_equal(edge_point(tri, EdgeParam(3, 0.5)), tri.nodes[5])


def test_edge_to_area_examples():
    assert edge_to_area(EdgeParam(1, 0.25)) == (0.25, 0.0)
    assert edge_to_area(EdgeParam(2, 0.25)) == (0.75, 0.25)
    assert edge_to_area(EdgeParam(3, 1.0)) == (0.0, 0.0)
    with pytest.raises(ValueError):
        edge_to_area(EdgeParam(4, 0.5))


def test_edge_point_matches_interpolate():
    rng = np.random.default_rng(1)
    tri = random_element(rng, curvature=0.3)
    for edge in (1, 2, 3):
        for g in rng.uniform(size=100):
            e = EdgeParam(edge, g)
            assert np.allclose(edge_point(tri, e), interpolate(tri, *edge_to_area(e)),
                               atol=1e-14, rtol=0)


def test_newton_examples():
    tri = demo_element()
    proj = build_reference_frame(tri, [0.3, 0.3, 1.0])
    res = newton_invert(proj, proj.planar_nodes[1], guess=(0.9, 0.05))
    assert abs(res.xi - 1.0) < 1e-12 and abs(res.eta) < 1e-12
    unit = build_reference_frame(UNIT, [0.2, 0.2, 1.0])
    res = newton_invert(unit, unit.to_local([0.3, 0.2, 0.0])[:2])
    assert (res.xi, res.eta) == pytest.approx((0.3, 0.2), abs=1e-12)
    target = proj.to_local(interpolate(tri, 0.4, 0.3))[:2]
    res = newton_invert(proj, target)
    assert (res.xi, res.eta) == pytest.approx((0.4, 0.3), abs=1e-11)
    assert res.residual <= 1e-12


def test_newton_round_trip_random_elements():
    rng = np.random.default_rng(7)
    for _ in range(50):
        tri = random_element(rng, curvature=0.2)
        proj = build_reference_frame(tri, tri.centroid + tri.bounding_radius)
        xi, eta = rng.dirichlet([1, 1, 1])[:2]
        res = newton_invert(proj, proj.to_local(interpolate(tri, xi, eta))[:2])
        assert abs(res.xi - xi) + abs(res.eta - eta) < 1e-9


def test_newton_failure_reports():
    proj = build_reference_frame(demo_element(), [0.3, 0.3, 1.0])
    with pytest.raises(NewtonConvergenceError):
        newton_invert(proj, (1e6, -3e7), max_iter=2)


def test_in_reference_triangle():
    assert in_reference_triangle(0.2, 0.3)
    assert not in_reference_triangle(0.7, 0.4)
    assert in_reference_triangle(-1e-10, 0.5, slack=1e-9)


def test_element_is_immutable():
    tri = demo_element()
    with pytest.raises(ValueError):
        tri.nodes[0, 0] = 3.0
    assert math.isclose(UNIT.bounding_radius, np.max(np.linalg.norm(
        UNIT.nodes - UNIT.nodes.mean(0), axis=1)))
