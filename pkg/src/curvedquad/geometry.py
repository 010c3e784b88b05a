"""Planar geometry of an element seen from a field point.

The element is placed in a reference frame with its three corners in the
plane z = 0 and the field point on the z axis.  Everything here works on
the projected edge curves, which are quadratics in the edge parameter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .element import (EDGE_NODES, NODE_COORDS, CurvedTriangle, EdgeParam,
                      edge_shape_derivatives, edge_shape_functions, edge_to_area,
                      in_reference_triangle, newton_planar)
from .errors import DegenerateElementError, NewtonConvergenceError

TWO_PI = 2.0 * math.pi
SNAP_TOL = 1e-9
DISC_SNAP = 1e-12


class _AllReal:
    """Sentinel returned by the root solvers for an identically zero polynomial."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ALL_REAL"


ALL_REAL = _AllReal()


class RayHit(NamedTuple):
    edge: int
    gamma: float
    r: float


@dataclass(frozen=True)
class OriginLocation:
    """Where the projected field point sits relative to the element.

    ``kind`` is one of ``"inside"``, ``"outside"``, ``"vertex"``, ``"edge"``.
    ``coords`` holds the reference coordinates of the origin when it lies on
    the element; ``point`` is the planar boundary point it was snapped to.
    """

    kind: str
    corner: int | None = None
    edge: EdgeParam | None = None
    coords: tuple[float, float] | None = None
    point: tuple[float, float] = (0.0, 0.0)
    converged: bool = True

    @property
    def on_element(self) -> bool:
        return self.kind != "outside"

    @property
    def on_boundary(self) -> bool:
        return self.kind in ("vertex", "edge")

    def tag(self) -> str:
        if self.kind == "vertex":
            return f"vertex{self.corner}"
        if self.kind == "edge":
            return f"edge{self.edge.edge}"
        return self.kind


@dataclass(frozen=True)
class ProjectedTriangle:
    """Element in the reference frame of a field point.

    ``rotation`` and ``origin`` map a world point ``p`` to local coordinates
    ``rotation @ (p - origin)``.
    """

    planar_nodes: np.ndarray
    z_nodes: np.ndarray
    z_field: float
    rotation: np.ndarray
    origin: np.ndarray
    source: CurvedTriangle
    xy: tuple = field(repr=False, default=())
    scale: float = 1.0
    radius: float = 1.0

    def to_local(self, p) -> np.ndarray:
        return (np.asarray(p, dtype=float) - self.origin) @ self.rotation.T

    def to_world(self, q) -> np.ndarray:
        return np.asarray(q, dtype=float) @ self.rotation + self.origin

    def shifted(self, dx: float, dy: float) -> tuple:
        """Flat planar node tuple translated by (-dx, -dy)."""
        return tuple(v - (dx if k % 2 == 0 else dy) for k, v in enumerate(self.xy))

    def corner_angles(self) -> tuple[float, float, float]:
        """Interior angles of the straight-sided projected triangle."""
        c = self.planar_nodes[:3]
        out = []
        for k in range(3):
            a = c[(k + 1) % 3] - c[k]
            b = c[(k + 2) % 3] - c[k]
            out.append(math.atan2(abs(a[0] * b[1] - a[1] * b[0]), float(a @ b)))
        return tuple(out)

    def chord_lengths(self) -> tuple[float, float, float]:
        """Length of the straight edge starting at each corner."""
        c = self.planar_nodes[:3]
        return tuple(float(np.linalg.norm(c[(k + 1) % 3] - c[k])) for k in range(3))


def build_reference_frame(tri: CurvedTriangle, x) -> ProjectedTriangle:
    """Rotate and translate so the corners lie in z = 0 and ``x`` on the z axis."""
    x = np.asarray(x, dtype=float)
    c = tri.corners
    e1 = c[1] - c[0]
    n = np.cross(e1, c[2] - c[0])
    nn = np.linalg.norm(n)
    l1 = np.linalg.norm(e1)
    if nn <= 1e-14 * l1 * l1 or l1 == 0.0:
        raise DegenerateElementError("element corners are collinear")
    n /= nn
    e1 /= l1
    e2 = np.cross(n, e1)
    rotation = np.vstack([e1, e2, n])
    z_field = float((x - c[0]) @ n)
    origin = x - z_field * n
    local = (tri.nodes - origin) @ rotation.T
    planar = local[:, :2].copy()
    planar.setflags(write=False)
    z_nodes = local[:, 2].copy()
    # the three corners are in the plane by construction
    z_nodes[:3] = 0.0
    scale = max(float(np.linalg.norm(planar[(k + 1) % 3] - planar[k])) for k in range(3))
    return ProjectedTriangle(
        planar_nodes=planar,
        z_nodes=z_nodes,
        z_field=z_field,
        rotation=rotation,
        origin=origin,
        source=tri,
        xy=tuple(float(v) for v in planar.ravel()),
        scale=scale,
        radius=math.sqrt(2.0) * tri.bounding_radius,
    )


def canonical_angle(theta: float) -> float:
    """Wrap an angle into [0, 2 pi); values within 1e-12 of 2 pi map to 0."""
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    if t >= TWO_PI - 1e-12:
        t = 0.0
    return t


def solve_quadratic_real(a: float, b: float, c: float):
    """Real roots of ``a g^2 + b g + c``, ascending.

    A double root is reported once.  Returns :data:`ALL_REAL` when all three
    coefficients vanish.
    """
    scale = max(abs(a), abs(b), abs(c))
    if scale == 0.0:
        return ALL_REAL
    if abs(a) <= 1e-14 * scale:
        if abs(b) <= 1e-14 * scale:
            return ()
        return (-c / b,)
    # normalise so the discriminant cannot underflow or overflow
    a, b, c = a / scale, b / scale, c / scale
    disc = b * b - 4.0 * a * c
    if abs(disc) <= DISC_SNAP * b * b:
        return (-b / (2.0 * a),)
    if disc < 0.0:
        return ()
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    r1 = q / a
    r2 = c / q
    return (r1, r2) if r1 <= r2 else (r2, r1)


def _polish_cubic(a, b, c, d, x):
    f = ((a * x + b) * x + c) * x + d
    for _ in range(8):
        df = (3.0 * a * x + 2.0 * b) * x + c
        if df == 0.0:
            break
        xn = x - f / df
        fn = ((a * xn + b) * xn + c) * xn + d
        if abs(fn) >= abs(f):
            break
        x, f = xn, fn
    return x


def solve_cubic_real(a: float, b: float, c: float, d: float):
    """Real roots of ``a g^3 + b g^2 + c g + d``, ascending and de-duplicated.

    One real root is found in closed form and polished by Newton, then the
    cubic is deflated to a quadratic.  Vanishing leading coefficients fall
    back to :func:`solve_quadratic_real`.
    """
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if scale == 0.0:
        return ALL_REAL
    if abs(a) <= 1e-14 * scale:
        return solve_quadratic_real(b, c, d)
    p2, p1, p0 = b / a, c / a, d / a
    # depressed cubic t^3 + P t + Q with x = t - p2/3
    shift = p2 / 3.0
    P = p1 - p2 * shift
    Q = 2.0 * shift ** 3 - p1 * shift + p0
    D = 0.25 * Q * Q + P * P * P / 27.0
    if D >= 0.0:
        u = -0.5 * Q - math.copysign(math.sqrt(D), Q)
        u = math.copysign(abs(u) ** (1.0 / 3.0), u)
        t = u - P / (3.0 * u) if u != 0.0 else 0.0
    else:
        m = 2.0 * math.sqrt(-P / 3.0)
        arg = max(-1.0, min(1.0, 3.0 * Q / (P * m)))
        t = m * math.cos(math.acos(arg) / 3.0)
    r = _polish_cubic(1.0, p2, p1, p0, t - shift)
    # deflate: x^3 + p2 x^2 + p1 x + p0 = (x - r)(x^2 + bq x + cq)
    # forward (p1 + r bq) or backward (-p0 / r) constant term, whichever has
    # the smaller rounding-error bound
    bq = p2 + r
    cq = p1 + r * bq
    if r != 0.0 and abs(p0 / r) < abs(p1) + abs(r) * (abs(p2) + abs(r)):
        cq = -p0 / r
    rest = solve_quadratic_real(1.0, bq, cq)
    roots = [r]
    if rest is not ALL_REAL:
        roots.extend(_polish_cubic(1.0, p2, p1, p0, g) for g in rest)
    roots.sort()
    out = []
    for g in roots:
        if out and abs(g - out[-1]) <= 1e-7 * max(1.0, abs(g)):
            continue
        out.append(g)
    return tuple(out)


def _edge_coeffs(xy, edge: int):
    """Power-basis coefficients of the projected edge: x = a0 + a1 g + a2 g^2."""
    i, j, m = EDGE_NODES[edge - 1]
    xi_, yi = xy[2 * i], xy[2 * i + 1]
    xj, yj = xy[2 * j], xy[2 * j + 1]
    xm, ym = xy[2 * m], xy[2 * m + 1]
    ax = (xi_, -3.0 * xi_ - xj + 4.0 * xm, 2.0 * xi_ + 2.0 * xj - 4.0 * xm)
    ay = (yi, -3.0 * yi - yj + 4.0 * ym, 2.0 * yi + 2.0 * yj - 4.0 * ym)
    return ax, ay


def _edge_xy(xy, edge, g):
    i, j, m = EDGE_NODES[edge - 1]
    J1, J2, J3 = edge_shape_functions(g)
    return (xy[2 * i] * J1 + xy[2 * j] * J2 + xy[2 * m] * J3,
            xy[2 * i + 1] * J1 + xy[2 * j + 1] * J2 + xy[2 * m + 1] * J3)


def _edge_dxy(xy, edge, g):
    i, j, m = EDGE_NODES[edge - 1]
    D1, D2, D3 = edge_shape_derivatives(g)
    return (xy[2 * i] * D1 + xy[2 * j] * D2 + xy[2 * m] * D3,
            xy[2 * i + 1] * D1 + xy[2 * j + 1] * D2 + xy[2 * m + 1] * D3)


def planar_edge_point(proj: ProjectedTriangle, e: EdgeParam) -> tuple[float, float]:
    return _edge_xy(proj.xy, e.edge, e.gamma)


def ray_hits(xy, edge: int, theta: float, r_min: float) -> list[RayHit]:
    """Crossings of the ray at angle ``theta`` from (0, 0) with one edge."""
    i, j, m = EDGE_NODES[edge - 1]
    s = math.sin(theta)
    co = math.cos(theta)
    ci = xy[2 * i] * s - xy[2 * i + 1] * co
    cj = xy[2 * j] * s - xy[2 * j + 1] * co
    cm = xy[2 * m] * s - xy[2 * m + 1] * co
    roots = solve_quadratic_real(2.0 * ci + 2.0 * cj - 4.0 * cm,
                                 -3.0 * ci - cj + 4.0 * cm, ci)
    hits = []
    if roots is ALL_REAL:
        return hits
    for g in roots:
        if not 0.0 < g < 1.0:
            continue
        x, y = _edge_xy(xy, edge, g)
        r = x / co if abs(co) >= abs(s) else y / s
        if r > r_min:
            hits.append(RayHit(edge, g, r))
    hits.sort(key=lambda h: h.r)
    return hits


def ray_edge_intersections(proj: ProjectedTriangle, edge_index: int, theta: float,
                           r_min: float | None = None) -> list[RayHit]:
    """Intersections of a ray from the origin with one projected edge.

    Parameters exclude the corners (open interval in gamma) and points
    behind the origin.  ``r_min`` defaults to ``1e-11`` times the element
    size.
    """
    if r_min is None:
        r_min = 1e-11 * proj.scale
    return ray_hits(proj.xy, edge_index, theta, r_min)


def all_ray_hits(xy, theta: float, r_min: float) -> list[RayHit]:
    hits = ray_hits(xy, 1, theta, r_min) + ray_hits(xy, 2, theta, r_min) \
        + ray_hits(xy, 3, theta, r_min)
    hits.sort(key=lambda h: h.r)
    return hits


def tangent_polynomial(xy, edge: int) -> tuple[float, float, float, float]:
    """Cubic whose roots are edge parameters with tangent through the origin.

    This is the cross product ``x y' - y x'`` of the edge position with its
    derivative, expanded in powers of gamma (highest first).  The cubic term
    cancels identically for quadratic edges.
    """
    ax, ay = _edge_coeffs(xy, edge)
    # derivative coefficients: x' = a1 + 2 a2 g
    c3 = ax[2] * 2.0 * ay[2] - ay[2] * 2.0 * ax[2]
    c2 = ax[1] * 2.0 * ay[2] + ax[2] * ay[1] - ay[1] * 2.0 * ax[2] - ay[2] * ax[1]
    c1 = ax[0] * 2.0 * ay[2] + ax[1] * ay[1] - ay[0] * 2.0 * ax[2] - ay[1] * ax[1]
    c0 = ax[0] * ay[1] - ay[0] * ax[1]
    return c3, c2, c1, c0


def tangents_through_origin(xy, edge: int, snap: float) -> list[float]:
    roots = solve_cubic_real(*tangent_polynomial(xy, edge))
    if roots is ALL_REAL:
        return []
    out = []
    for g in roots:
        if not 0.0 < g < 1.0:
            continue
        x, y = _edge_xy(xy, edge, g)
        # a root at the origin itself is the on-edge case, handled separately
        if math.hypot(x, y) <= snap:
            continue
        out.append(g)
    return out


def origin_tangents(proj: ProjectedTriangle, edge_index: int) -> list[float]:
    """Edge parameters in (0, 1) whose tangent line passes through the origin."""
    return tangents_through_origin(proj.xy, edge_index, SNAP_TOL * proj.radius)


def edge_tangent_angle(xy, edge: int, g: float) -> tuple[float, float]:
    dx, dy = _edge_dxy(xy, edge, g)
    if dx == 0.0 and dy == 0.0:
        raise DegenerateElementError(f"zero tangent on edge {edge} at gamma={g}")
    psi = math.atan2(dy, dx)
    return canonical_angle(psi), canonical_angle(psi + math.pi)


def tangent_angle(proj: ProjectedTriangle, e: EdgeParam) -> tuple[float, float]:
    """Direction angles (psi, psi + pi) of the edge tangent at ``e``."""
    scale = proj.scale
    dx, dy = _edge_dxy(proj.xy, e.edge, e.gamma)
    if math.hypot(dx, dy) <= 1e-14 * scale:
        raise DegenerateElementError(f"zero tangent on edge {e.edge} at gamma={e.gamma}")
    return edge_tangent_angle(proj.xy, e.edge, e.gamma)


def _snap_to_edge(xy, edge, g, snap):
    # refine gamma to the closest edge point to the origin
    for _ in range(20):
        x, y = _edge_xy(xy, edge, g)
        dx, dy = _edge_dxy(xy, edge, g)
        i, j, m = EDGE_NODES[edge - 1]
        ddx = 4.0 * xy[2 * i] + 4.0 * xy[2 * j] - 8.0 * xy[2 * m]
        ddy = 4.0 * xy[2 * i + 1] + 4.0 * xy[2 * j + 1] - 8.0 * xy[2 * m + 1]
        f = x * dx + y * dy
        df = dx * dx + dy * dy + x * ddx + y * ddy
        if df == 0.0:
            break
        step = f / df
        g -= step
        if abs(step) < 1e-15:
            break
    x, y = _edge_xy(xy, edge, g)
    return g, math.hypot(x, y), (x, y)


def _seed_grid(xy):
    n = 6
    best = None
    for a in range(-1, n + 2):
        for b in range(-1, n + 2 - a):
            xi, eta = a / n, b / n
            x, y = _edge_free_map(xy, xi, eta)
            d = x * x + y * y
            if best is None or d < best[0]:
                best = (d, xi, eta)
    return best[1], best[2]


def _edge_free_map(xy, xi, eta):
    s = 1.0 - xi - eta
    L = (2.0 * s * (0.5 - xi - eta), 2.0 * xi * (xi - 0.5), 2.0 * eta * (eta - 0.5),
         4.0 * xi * s, 4.0 * xi * eta, 4.0 * eta * s)
    return (sum(L[k] * xy[2 * k] for k in range(6)),
            sum(L[k] * xy[2 * k + 1] for k in range(6)))


def locate_origin_xy(xy, scale: float, radius: float) -> OriginLocation:
    snap = SNAP_TOL * radius
    # box over corners and the Bezier control points of the edges, which
    # bounds the curves (the edge nodes alone do not)
    xs = list(xy[0:6:2])
    ys = list(xy[1:6:2])
    for i, j, m in EDGE_NODES:
        xs.append(2.0 * xy[2 * m] - 0.5 * (xy[2 * i] + xy[2 * j]))
        ys.append(2.0 * xy[2 * m + 1] - 0.5 * (xy[2 * i + 1] + xy[2 * j + 1]))
    if (min(xs) > snap or max(xs) < -snap or min(ys) > snap or max(ys) < -snap):
        return OriginLocation("outside")
    for k in range(3):
        if math.hypot(xy[2 * k], xy[2 * k + 1]) <= snap:
            return OriginLocation("vertex", corner=k + 1, coords=NODE_COORDS[k],
                                  point=(xy[2 * k], xy[2 * k + 1]))
    tol = 1e-12 * scale
    result = None
    for seed in (_seed_grid(xy), (1.0 / 3.0, 1.0 / 3.0)):
        try:
            result = newton_planar(xy, 0.0, 0.0, seed[0], seed[1], tol)
            break
        except NewtonConvergenceError:
            continue
    # edges whose curve passes within snap of the origin
    for edge in (1, 2, 3):
        if result is not None:
            xi, eta = result.xi, result.eta
            g0 = (xi, eta, 1.0 - eta)[edge - 1]
            off = (abs(eta), abs(1.0 - xi - eta), abs(xi))[edge - 1]
            if off > 1e-3:
                continue
        else:
            g0 = 0.5
        g0 = min(max(g0, 0.0), 1.0)
        g, dist, pt = _snap_to_edge(xy, edge, g0, snap)
        if dist <= snap and 0.0 < g < 1.0:
            e = EdgeParam(edge, g)
            return OriginLocation("edge", edge=e, coords=edge_to_area(e), point=pt)
    if result is None:
        return OriginLocation("outside", converged=False)
    if in_reference_triangle(result.xi, result.eta) and result.xi > 0.0 \
            and result.eta > 0.0 and result.xi + result.eta < 1.0:
        return OriginLocation("inside", coords=(result.xi, result.eta))
    return OriginLocation("outside")


def locate_origin(proj: ProjectedTriangle) -> OriginLocation:
    """Classify the origin as inside, outside, on a vertex or on an edge.

    A bounding box over the corners and edge control points gives a fast
    exit; otherwise the reference coordinates of the origin are found by
    Newton iteration.
    Vertex and edge snapping use a tolerance of ``1e-9`` times the element's
    bounding-sphere radius.  If Newton fails the origin is reported outside
    with ``converged=False``.
    """
    return locate_origin_xy(proj.xy, proj.scale, proj.radius)
