"""Element and field-point generators for demos, self-checks and tests."""
from __future__ import annotations

import numpy as np

from .element import (CurvedTriangle, EdgeParam, edge_point, interpolate,
                      planar_jacobian, surface_jacobian)
from .geometry import build_reference_frame, locate_origin

ORIGIN_CLASSES = ("inside", "vertex", "outside", "straight", "convex", "concave")

#: planar element with a straight edge 1, convex edge 2 and concave edge 3
DEMO_NODES = np.array([
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.5, 0.0, 0.0],
    [0.58, 0.58, 0.0],
    [0.08, 0.5, 0.0],
])

#: field points for the six demo cases: inside, on vertex 1, outside,
#: on the straight, convex and concave edge
DEMO_CASES = {
    1: ("inside", (0.3, 0.25, 0.0)),
    2: ("vertex", (0.0, 0.0, 0.0)),
    3: ("outside", (0.6, -0.3, 0.0)),
    4: ("straight", (0.4, 0.0, 0.0)),
    5: ("convex", EdgeParam(2, 0.4)),
    6: ("concave", EdgeParam(3, 0.5)),
}


def demo_element() -> CurvedTriangle:
    return CurvedTriangle(DEMO_NODES)


def demo_field_point(case: int) -> np.ndarray:
    """Field point of demo case ``case`` (1..6)."""
    if case not in DEMO_CASES:
        raise ValueError(f"case must be 1..6, got {case}")
    _, where = DEMO_CASES[case]
    if isinstance(where, EdgeParam):
        return edge_point(demo_element(), where)
    return np.array(where, dtype=float)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def _planar_corners(rng, min_angle=np.radians(30.0)):
    while True:
        c = rng.uniform(-1.0, 1.0, size=(3, 2))
        area = 0.5 * ((c[1, 0] - c[0, 0]) * (c[2, 1] - c[0, 1])
                      - (c[2, 0] - c[0, 0]) * (c[1, 1] - c[0, 1]))
        if area <= 0:
            c = c[[0, 2, 1]]
        angles = []
        for k in range(3):
            a = c[(k + 1) % 3] - c[k]
            b = c[(k + 2) % 3] - c[k]
            angles.append(np.arccos(a @ b / np.linalg.norm(a) / np.linalg.norm(b)))
        if min(angles) > min_angle and abs(area) > 0.2:
            return c


_QUALITY_GRID = np.array([(a, b) for a in np.linspace(0.0, 1.0, 21)
                          for b in np.linspace(0.0, 1.0, 21) if a + b <= 1.0 + 1e-12]).T


def jacobian_quality(tri: CurvedTriangle) -> float:
    """Smallest min/max ratio of the surface and corner-plane Jacobians.

    Sampled on a 21 x 21 grid; values near zero flag a nearly folded map.
    """
    xi, eta = _QUALITY_GRID
    J, _ = surface_jacobian(tri, xi, eta)
    proj = build_reference_frame(tri, tri.centroid)
    J2 = np.array([planar_jacobian(proj.xy, a, b) for a, b in zip(xi, eta)])
    if J2.min() <= 0.0:
        return 0.0
    return float(min(J.min() / J.max(), J2.min() / J2.max()))


def random_element(rng: np.random.Generator, curvature: float = 0.1,
                   bulge: tuple[float, float, float] | None = None,
                   rotate: bool = True, min_quality: float = 0.25,
                   max_tries: int = 200) -> CurvedTriangle:
    """Random curved element.

    Edge nodes are displaced from the chord midpoints by up to ``curvature``
    times the chord length, in-plane and out of plane.  ``bulge`` fixes the
    signed in-plane displacement per edge (positive is outward).  Elements
    whose :func:`jacobian_quality` is below ``min_quality`` are redrawn, at
    most ``max_tries`` times before ``ValueError`` is raised (some fixed
    bulges fold every element).
    """
    for _ in range(max_tries):
        tri = _draw_element(rng, curvature, bulge)
        if jacobian_quality(tri) >= min_quality:
            break
    else:
        raise ValueError(f"no element of quality {min_quality} in {max_tries} draws")
    if rotate:
        nodes = tri.nodes @ random_rotation(rng).T + rng.uniform(-2.0, 2.0, size=3)
        tri = CurvedTriangle(nodes)
    return tri


def _draw_element(rng, curvature, bulge):
    c = _planar_corners(rng)
    nodes = np.zeros((6, 3))
    nodes[:3, :2] = c
    for k in range(3):
        a, b = c[k], c[(k + 1) % 3]
        chord = b - a
        length = np.linalg.norm(chord)
        outward = np.array([chord[1], -chord[0]]) / length
        if bulge is None:
            inplane = rng.uniform(-curvature, curvature)
            lift = rng.uniform(-curvature, curvature)
        else:
            inplane = bulge[k]
            lift = 0.0 if bulge[k] == 0.0 else rng.uniform(-curvature, curvature)
        nodes[3 + k, :2] = 0.5 * (a + b) + inplane * length * outward
        nodes[3 + k, 2] = lift * length
    return CurvedTriangle(nodes)


def _plane_normal(tri):
    c = tri.corners
    n = np.cross(c[1] - c[0], c[2] - c[0])
    return n / np.linalg.norm(n)


def random_configuration(rng: np.random.Generator, kind: str, curvature: float = 0.1):
    """Random ``(element, field point)`` whose projected origin is of ``kind``.

    ``kind`` is one of :data:`ORIGIN_CLASSES`.
    """
    if kind in ("straight", "convex", "concave"):
        edge = int(rng.integers(1, 4))
        amount = {"straight": 0.0, "convex": 1.0, "concave": -1.0}[kind]
        while True:
            bulge = [rng.uniform(-curvature, curvature) for _ in range(3)]
            bulge[edge - 1] = amount * rng.uniform(0.3 * curvature, curvature)
            try:
                tri = random_element(rng, curvature, bulge=tuple(bulge))
                break
            except ValueError:
                continue
        y = edge_point(tri, EdgeParam(edge, rng.uniform(0.1, 0.9)))
        z = rng.choice([0.0, rng.uniform(-0.5, 0.5)])
        return tri, y + z * _plane_normal(tri)
    tri = random_element(rng, curvature)
    n = _plane_normal(tri)
    z = rng.choice([0.0, rng.uniform(-0.5, 0.5)])
    if kind == "inside":
        while True:
            xi, eta = rng.uniform(0.03, 0.94, size=2)
            if xi + eta < 0.97:
                break
        return tri, interpolate(tri, xi, eta) + z * n
    if kind == "vertex":
        return tri, tri.corners[int(rng.integers(0, 3))] + z * n
    if kind == "outside":
        lo = tri.nodes.min(axis=0)
        hi = tri.nodes.max(axis=0)
        span = hi - lo
        while True:
            p = rng.uniform(lo - 0.5 * span, hi + 0.5 * span)
            p = p - ((p - tri.corners[0]) @ n) * n
            proj = build_reference_frame(tri, p)
            if locate_origin(proj).kind == "outside":
                return tri, p + z * n
    raise ValueError(f"unknown origin class {kind!r}")
