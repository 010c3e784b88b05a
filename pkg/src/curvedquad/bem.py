"""Collocation boundary elements for the Laplace equation.

Potentials are interpolated with the element shape functions and the
boundary integral equation is collocated at the mesh nodes.  Panel
integrals use the polar rule when the field point is near the panel
(``sigma < sel.sigma_threshold``) and the 25-point symmetric rule otherwise.

The test problem is a point source inside a closed surface.  Its potential
is harmonic outside the body and decays at infinity, so it is the solution
of an exterior Neumann problem, which is what :func:`solve_neumann` solves:

    (C - A) phi = -B q,    C_i = -sum_j A_ij,

with ``A`` the double-layer and ``B`` the single-layer matrix and ``q`` the
derivative along the outward normal of the body.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .element import linear_shape_functions, shape_functions, surface_jacobian, interpolate
from .errors import SolverError
from .mesh import SurfaceMesh, node_normals
from .quadrature import RuleSelection, fallback_rule, select_rule, sigma

FOUR_PI = 4.0 * math.pi
#: largest accepted condition number of the collocation matrix
MAX_CONDITION = 1e12


def green(x, y, n_y) -> tuple[np.ndarray, np.ndarray]:
    """Free-space Green's function ``1/(4 pi R)`` and its normal derivative.

    The derivative is taken at ``y`` along ``n_y``, ``(x - y).n_y / (4 pi R^3)``,
    so that its integral over a closed surface with outward normal is -1 for
    ``x`` inside and 0 for ``x`` outside.  Broadcasts over leading axes.
    """
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    R = np.linalg.norm(d, axis=-1)
    if np.any(R == 0.0):
        raise ValueError("Green's function evaluated at coincident points")
    G = 1.0 / (FOUR_PI * R)
    dG = np.sum(d * np.asarray(n_y, dtype=float), axis=-1) / (FOUR_PI * R ** 3)
    return G, dG


def _shapes(xi, eta, order):
    return shape_functions(xi, eta) if order == 2 else linear_shape_functions(xi, eta)


def panel_integrals(tri, x, sel: RuleSelection | None = None,
                    order: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Single- and double-layer moments of one panel at field point ``x``.

    Returns ``(single, double)`` with ``single[i] = int L_i G dS`` and
    ``double[i] = int L_i dG/dn dS``; ``order=1`` uses the three linear
    shape functions of a flat panel instead of the six quadratic ones.
    """
    rule = select_rule(tri, x, sel)
    J, n = surface_jacobian(tri, rule.xi, rule.eta)
    y = interpolate(tri, rule.xi, rule.eta)
    G, dG = green(x, y, n)
    L = _shapes(rule.xi, rule.eta, order)
    jw = J * rule.w
    return L @ (G * jw), L @ (dG * jw)


@dataclass
class _PanelData:
    # far-field quadrature data for every element
    y: np.ndarray       # (P, Q, 3) points
    nw: np.ndarray      # (P, Q, 3) normal times Jacobian times weight
    jw: np.ndarray      # (P, Q) Jacobian times weight
    L: np.ndarray       # (k, Q) shape functions at the rule points
    centroid: np.ndarray
    radius: np.ndarray  # scaled bounding radius


def _panel_data(mesh: SurfaceMesh, s: float) -> _PanelData:
    rule = fallback_rule()
    P, Q = mesh.n_elements, len(rule)
    y = np.empty((P, Q, 3))
    nw = np.empty((P, Q, 3))
    jw = np.empty((P, Q))
    centroid = np.empty((P, 3))
    radius = np.empty(P)
    for j in range(P):
        tri = mesh.element(j)
        J, n = surface_jacobian(tri, rule.xi, rule.eta)
        y[j] = interpolate(tri, rule.xi, rule.eta)
        jw[j] = J * rule.w
        nw[j] = n * jw[j][:, None]
        centroid[j] = tri.centroid
        radius[j] = s * tri.bounding_radius
    return _PanelData(y, nw, jw, _shapes(rule.xi, rule.eta, mesh.order), centroid, radius)


@dataclass
class BoundaryProblem:
    """Assembled collocation matrices of a mesh.

    ``A`` (double layer) and ``B`` (single layer) are N x N with rows for
    collocation nodes and columns for potential / flux unknowns.
    ``corner`` holds ``c_i = 1 + sum_j A_ij``, which is 1/2 at smooth points.
    """

    mesh: SurfaceMesh
    selection: RuleSelection
    A: np.ndarray
    B: np.ndarray
    near_pairs: int = 0
    seconds: float = 0.0
    corner: np.ndarray = field(init=False)

    def __post_init__(self):
        self.corner = 1.0 + self.A.sum(axis=1)


def _moments(data: _PanelData, X: np.ndarray, j: int):
    # far-field single/double moments of element j for all rows of X
    d = X[:, None, :] - data.y[j][None]
    R = np.linalg.norm(d, axis=-1)
    G = data.jw[j][None] / (FOUR_PI * R)
    dG = np.sum(d * data.nw[j][None], axis=-1) / (FOUR_PI * R ** 3)
    return G @ data.L.T, dG @ data.L.T


def _near_rows(mesh, data, X, j, sel):
    # rows of X for which element j needs the polar rule
    dist = np.linalg.norm(X - data.centroid[j], axis=1)
    cand = np.nonzero((dist <= data.radius[j])
                      | (dist < sel.sigma_threshold * data.radius[j]))[0]
    tri = mesh.element(j)
    return [i for i in cand if sigma(tri, X[i], sel.s) < sel.sigma_threshold]


def layer_moments(mesh: SurfaceMesh, X, sel: RuleSelection | None = None):
    """Single- and double-layer matrices for arbitrary field points ``X``.

    Returns ``(B, A, near)``, each matrix of shape ``(len(X), N)``, and the
    number of (point, element) pairs integrated with the polar rule.
    """
    sel = RuleSelection() if sel is None else sel
    X = np.atleast_2d(np.asarray(X, dtype=float))
    data = _panel_data(mesh, sel.s)
    A = np.zeros((len(X), mesh.n_nodes))
    B = np.zeros((len(X), mesh.n_nodes))
    near = 0
    for j, idx in enumerate(mesh.elements):
        single, double = _moments(data, X, j)
        tri = mesh.element(j)
        for i in _near_rows(mesh, data, X, j, sel):
            single[i], double[i] = panel_integrals(tri, X[i], sel, mesh.order)
            near += 1
        B[:, idx] += single
        A[:, idx] += double
    return B, A, near


def assemble(mesh: SurfaceMesh, sel: RuleSelection | None = None) -> BoundaryProblem:
    """Collocate at every mesh node and integrate over every element."""
    sel = RuleSelection() if sel is None else sel
    t0 = time.perf_counter()
    B, A, near = layer_moments(mesh, mesh.nodes, sel)
    return BoundaryProblem(mesh, sel, A, B, near, time.perf_counter() - t0)


def corner_constant(prob: BoundaryProblem, i: int) -> float:
    """``c_i = 1 + sum_j A_ij``: the solid-angle fraction seen from inside."""
    return float(prob.corner[i])


@dataclass(frozen=True)
class PointSource:
    """Potential ``strength / (4 pi |x - position|)``."""

    position: tuple[float, float, float]
    strength: float = 1.0

    def potential(self, x) -> np.ndarray:
        R = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(self.position), axis=-1)
        return self.strength / (FOUR_PI * R)


def neumann_bc(mesh: SurfaceMesh, src: PointSource) -> tuple[np.ndarray, np.ndarray]:
    """Nodal flux ``q`` along the outward normal and nodal potential of ``src``."""
    d = mesh.nodes - np.asarray(src.position, dtype=float)
    R = np.linalg.norm(d, axis=1)
    scale = np.max(np.linalg.norm(mesh.nodes - mesh.nodes.mean(axis=0), axis=1))
    if np.any(R <= 1e-12 * scale):
        raise ValueError("point source lies on the surface")
    n = node_normals(mesh)
    phi = src.strength / (FOUR_PI * R)
    q = -src.strength * np.sum(d * n, axis=1) / (FOUR_PI * R ** 3)
    return q, phi


class NeumannSolution(NamedTuple):
    phi: np.ndarray
    residual: float
    condition: float


def solve_neumann(prob: BoundaryProblem, q) -> NeumannSolution:
    """Solve the exterior Neumann problem ``(C - A) phi = -B q``.

    Raises :class:`SolverError` if the matrix is singular or its condition
    number exceeds :data:`MAX_CONDITION`.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (prob.mesh.n_nodes,):
        raise ValueError(f"q must have length {prob.mesh.n_nodes}")
    M = np.diag(-prob.A.sum(axis=1)) - prob.A
    rhs = -prob.B @ q
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SolverError(f"collocation matrix is ill-conditioned (condition {cond:.3e})")
    try:
        phi = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(str(exc)) from exc
    residual = float(np.linalg.norm(M @ phi - rhs))
    return NeumannSolution(phi, residual, cond)


def evaluate_potential(prob: BoundaryProblem, phi, q, X) -> np.ndarray:
    """Potential at points ``X`` outside the body from boundary data."""
    B, A, _ = layer_moments(prob.mesh, X, prob.selection)
    return A @ np.asarray(phi, dtype=float) - B @ np.asarray(q, dtype=float)


def rms_error(phi, phi_exact) -> float:
    """Root-mean-square difference of two nodal vectors."""
    phi = np.asarray(phi, dtype=float)
    phi_exact = np.asarray(phi_exact, dtype=float)
    if phi.shape != phi_exact.shape:
        raise ValueError("vectors must have equal length")
    return float(np.sqrt(np.mean((phi - phi_exact) ** 2)))


def fit_slope(counts, errors) -> tuple[float, float]:
    """Least-squares fit ``error = a * count**b``; returns ``(a, b)``."""
    counts = np.asarray(counts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(counts) < 2:
        return math.nan, math.nan
    b, loga = np.polyfit(np.log(counts), np.log(errors), 1)
    return float(math.exp(loga)), float(b)


@dataclass(frozen=True)
class ConvergenceRecord:
    variant: str
    refinement: int
    P: int
    N: int
    rms: float
    seconds: float

    def as_dict(self) -> dict:
        return {"variant": self.variant, "refinement": self.refinement, "P": self.P,
                "N": self.N, "rms": self.rms, "seconds": self.seconds}


def run_case(mesh: SurfaceMesh, src: PointSource, sel: RuleSelection | None = None):
    """Assemble, solve and compare with the exact nodal potential.

    Returns ``(rms error, seconds, solution)``.
    """
    t0 = time.perf_counter()
    prob = assemble(mesh, sel)
    q, phi_exact = neumann_bc(mesh, src)
    sol = solve_neumann(prob, q)
    return rms_error(sol.phi, phi_exact), time.perf_counter() - t0, sol
