"""Six-node (second-order) triangle: interpolation, edges, Jacobians and
inversion of the projected element map.

Node order is corners 1, 2, 3 followed by the edge nodes 4 (edge 1-2),
5 (edge 2-3) and 6 (edge 3-1).  Indices are zero-based in code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateElementError, NewtonConvergenceError

#: node indices (corner i, corner j, edge node) of edges 1, 2, 3
EDGE_NODES = ((0, 1, 3), (1, 2, 4), (2, 0, 5))

#: reference coordinates of the six nodes
NODE_COORDS = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.5, 0.0), (0.5, 0.5), (0.0, 0.5))

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 30
NEWTON_MAX_HALVINGS = 6


class EdgeParam(NamedTuple):
    """Point on edge ``edge`` (1, 2 or 3) at parameter ``gamma`` in [0, 1]."""

    edge: int
    gamma: float


class InverseResult(NamedTuple):
    xi: float
    eta: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class CurvedTriangle:
    """Isoparametric six-node triangle in three dimensions."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.shape != (6, 3):
            raise ValueError(f"expected 6x3 node array, got shape {nodes.shape}")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("element nodes must be finite")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        c = nodes[:3]
        cross = np.cross(c[1] - c[0], c[2] - c[0])
        scale = max(np.linalg.norm(c[1] - c[0]), np.linalg.norm(c[2] - c[0]),
                    np.linalg.norm(c[2] - c[1]))
        if scale == 0.0 or np.linalg.norm(cross) <= 1e-14 * scale * scale:
            raise DegenerateElementError("element corners are collinear")

    @classmethod
    def flat(cls, corners) -> "CurvedTriangle":
        """Straight-sided element with edge nodes at the chord midpoints."""
        c = np.asarray(corners, dtype=float)
        mids = 0.5 * (c[[0, 1, 2]] + c[[1, 2, 0]])
        return cls(np.vstack([c, mids]))

    @property
    def corners(self) -> np.ndarray:
        return self.nodes[:3]

    @property
    def centroid(self) -> np.ndarray:
        """Mean of the six nodes."""
        return self.nodes.mean(axis=0)

    @property
    def bounding_radius(self) -> float:
        """Largest node distance from the node mean (unscaled)."""
        return float(np.max(np.linalg.norm(self.nodes - self.centroid, axis=1)))


def shape_functions(xi, eta) -> np.ndarray:
    """Quadratic shape functions L1..L6, stacked along the first axis."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    s = 1.0 - xi - eta
    return np.stack([
        2.0 * s * (0.5 - xi - eta),
        2.0 * xi * (xi - 0.5),
        2.0 * eta * (eta - 0.5),
        4.0 * xi * s,
        4.0 * xi * eta,
        4.0 * eta * s,
    ])


def shape_gradients(xi, eta) -> np.ndarray:
    """Derivatives of the shape functions.

    Returns
    -------
    ndarray, shape (6, 2, ...)
        ``out[i, 0]`` is dL_i/dxi and ``out[i, 1]`` is dL_i/deta.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    zero = np.zeros_like(xi + eta)
    d1 = 4.0 * xi + 4.0 * eta - 3.0
    dxi = np.stack([d1, 4.0 * xi - 1.0 + zero, zero,
                    4.0 * (1.0 - 2.0 * xi - eta), 4.0 * eta + zero, -4.0 * eta + zero])
    deta = np.stack([d1, zero, 4.0 * eta - 1.0 + zero,
                     -4.0 * xi + zero, 4.0 * xi + zero, 4.0 * (1.0 - xi - 2.0 * eta)])
    return np.stack([dxi, deta], axis=1)


def linear_shape_functions(xi, eta) -> np.ndarray:
    """Barycentric (three-node) shape functions, for flat linear panels."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return np.stack([1.0 - xi - eta, xi + 0.0 * eta, eta + 0.0 * xi])


def interpolate(tri: CurvedTriangle, xi, eta) -> np.ndarray:
    """Position on the element; shape (..., 3) for array input."""
    L = shape_functions(xi, eta)
    return np.tensordot(np.moveaxis(L, 0, -1), tri.nodes, axes=1)


def tangents(tri: CurvedTriangle, xi, eta) -> tuple[np.ndarray, np.ndarray]:
    """Covariant tangent vectors dy/dxi and dy/deta."""
    dL = shape_gradients(xi, eta)
    t_xi = np.tensordot(np.moveaxis(dL[:, 0], 0, -1), tri.nodes, axes=1)
    t_eta = np.tensordot(np.moveaxis(dL[:, 1], 0, -1), tri.nodes, axes=1)
    return t_xi, t_eta


def surface_jacobian(tri: CurvedTriangle, xi, eta) -> tuple[np.ndarray, np.ndarray]:
    """Area Jacobian ``J`` and unit normal ``n`` at reference coordinates.

    The normal follows the right-hand rule on the node ordering.  Raises
    :class:`DegenerateElementError` where the tangents are (nearly) parallel.
    """
    t_xi, t_eta = tangents(tri, xi, eta)
    cross = np.cross(t_xi, t_eta)
    J = np.linalg.norm(cross, axis=-1)
    rho = tri.bounding_radius
    if np.any(J < 1e-14 * rho * rho):
        raise DegenerateElementError("vanishing surface Jacobian")
    return J, cross / J[..., None]


def edge_shape_functions(gamma) -> tuple:
    g = gamma
    return (2.0 * g * g - 3.0 * g + 1.0, 2.0 * g * g - g, -4.0 * g * g + 4.0 * g)


def edge_shape_derivatives(gamma) -> tuple:
    g = gamma
    return (4.0 * g - 3.0, 4.0 * g - 1.0, -8.0 * g + 4.0)


def edge_point(tri: CurvedTriangle, e: EdgeParam) -> np.ndarray:
    """Point at parameter ``gamma`` along edge ``edge`` (1, 2 or 3)."""
    i, j, m = EDGE_NODES[e.edge - 1]
    J1, J2, J3 = edge_shape_functions(e.gamma)
    n = tri.nodes
    return n[i] * J1 + n[j] * J2 + n[m] * J3


def edge_to_area(e: EdgeParam) -> tuple[float, float]:
    """Reference coordinates (xi, eta) of an edge point."""
    g = e.gamma
    if e.edge == 1:
        return (g, 0.0)
    if e.edge == 2:
        return (1.0 - g, g)
    if e.edge == 3:
        return (0.0, 1.0 - g)
    raise ValueError(f"edge index must be 1, 2 or 3, got {e.edge}")


def _planar_map(xy, xi, eta):
    # position and derivative of the projected map; xy is a flat 12-tuple
    s = 1.0 - xi - eta
    L = (2.0 * s * (0.5 - xi - eta), 2.0 * xi * (xi - 0.5), 2.0 * eta * (eta - 0.5),
         4.0 * xi * s, 4.0 * xi * eta, 4.0 * eta * s)
    d1 = 4.0 * xi + 4.0 * eta - 3.0
    Lx = (d1, 4.0 * xi - 1.0, 0.0, 4.0 * (1.0 - 2.0 * xi - eta), 4.0 * eta, -4.0 * eta)
    Le = (d1, 0.0, 4.0 * eta - 1.0, -4.0 * xi, 4.0 * xi, 4.0 * (1.0 - xi - 2.0 * eta))
    x = y = xx = xe = yx = ye = 0.0
    for k in range(6):
        px = xy[2 * k]
        py = xy[2 * k + 1]
        x += L[k] * px
        y += L[k] * py
        xx += Lx[k] * px
        xe += Le[k] * px
        yx += Lx[k] * py
        ye += Le[k] * py
    return x, y, xx, xe, yx, ye


def planar_jacobian(xy, xi: float, eta: float) -> float:
    """Signed determinant of d(x, y)/d(xi, eta) for the projected map."""
    _, _, xx, xe, yx, ye = _planar_map(xy, xi, eta)
    return xx * ye - xe * yx


def newton_planar(xy, tx: float, ty: float, xi: float, eta: float, tol: float,
                  max_iter: int = NEWTON_MAX_ITER) -> InverseResult:
    """Damped Newton iteration for the projected map (scalar kernel).

    ``tol`` is an absolute tolerance on the planar residual norm.
    """
    x, y, xx, xe, yx, ye = _planar_map(xy, xi, eta)
    rx = tx - x
    ry = ty - y
    res = math.hypot(rx, ry)
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NewtonConvergenceError(
                f"Newton inversion did not converge (residual {res:.3e})",
                target=(tx, ty), residual=res)
        det = xx * ye - xe * yx
        if det == 0.0:
            raise NewtonConvergenceError("singular Jacobian in Newton inversion",
                                         target=(tx, ty), residual=res)
        dxi = (ye * rx - xe * ry) / det
        deta = (xx * ry - yx * rx) / det
        step = 1.0
        for _ in range(NEWTON_MAX_HALVINGS + 1):
            nxi = xi + step * dxi
            neta = eta + step * deta
            x, y, xx, xe, yx, ye = _planar_map(xy, nxi, neta)
            nrx = tx - x
            nry = ty - y
            nres = math.hypot(nrx, nry)
            if nres < res:
                break
            step *= 0.5
        xi, eta, rx, ry, res = nxi, neta, nrx, nry, nres
        it += 1
    return InverseResult(xi, eta, res, it)


def newton_invert(proj, target, guess=(1.0 / 3.0, 1.0 / 3.0), tol: float = NEWTON_TOL,
                  max_iter: int = NEWTON_MAX_ITER) -> InverseResult:
    """Reference coordinates of a point in the projected element plane.

    Parameters
    ----------
    proj : ProjectedTriangle
        Element in its reference frame (see :mod:`curvedquad.geometry`).
    target : (x, y)
        Planar point to invert.
    guess : (xi, eta)
        Starting point; iterates are not clamped to the reference triangle.
    tol : float
        Residual tolerance relative to the element size.
    """
    if guess is None:
        guess = (1.0 / 3.0, 1.0 / 3.0)
    return newton_planar(proj.xy, float(target[0]), float(target[1]),
                         float(guess[0]), float(guess[1]), tol * proj.scale, max_iter)


def in_reference_triangle(xi: float, eta: float, slack: float = 0.0) -> bool:
    return xi >= -slack and eta >= -slack and xi + eta <= 1.0 + slack
