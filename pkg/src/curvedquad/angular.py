"""Angular integration variable for each breakpoint interval.

Between two breakpoints every ray crosses the same edges, and the radial
limit set by edge ``f`` is an analytic function of the angle.  Its
singularities are the complex directions in which a line through the origin
touches the (extended) edge, i.e. the zeros of the discriminant of the
ray-edge quadratic; for a straight edge they collapse onto the direction
parallel to the edge.  When such a singularity lies close to an interval, a
Gauss rule in plain angle converges slowly.

Two remedies are applied here, both from geometry alone:

* the angular nodes may be placed uniformly in the parameter ``gamma`` of
  one crossed edge instead of in angle.  The area element of that edge,
  ``r^2/2 dtheta = (x y' - y x')/2 dgamma``, is a polynomial in ``gamma`` and
  a tangency at an interval end loses its square-root behaviour.  The
  variable (angle or one edge parameter) is chosen to keep the remaining
  singularities farthest away, measured by the Bernstein ellipse parameter;
* intervals are cut geometrically towards any singularity that remains
  close, so that each piece is at most ``ratio`` times its distance from the
  singularity wide.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .element import EDGE_NODES
from .geometry import (ALL_REAL, TWO_PI, _edge_coeffs, _edge_xy, all_ray_hits,
                       solve_quadratic_real)

#: width of a graded piece relative to its distance from a singularity
POLE_RATIO = 0.5

#: singularities closer than this fraction of the interval are not graded
#: towards (they sit on an endpoint and are handled by the substitution)
END_TOL = 1e-9

#: angular map modes, see :func:`curvedquad._polar.angular_node`
SKIP, PLAIN, GRADED, EDGE = -1, 0, 1, 2


@dataclass(frozen=True)
class AngularPiece:
    """One angular interval with its integration variable."""

    lo: float
    hi: float
    mode: int
    edge: int = 0
    g_lo: float = 0.0
    g_hi: float = 0.0


def edge_roots(xy, edge: int, theta: float, scale: float) -> list[float]:
    """Parameters where the forward ray at ``theta`` meets the edge.

    Roots slightly outside [0, 1] (by 1e-6) are accepted and clamped, so
    that rays through a corner find the corner.
    """
    i, j, m = EDGE_NODES[edge - 1]
    s = math.sin(theta)
    co = math.cos(theta)
    ci = xy[2 * i] * s - xy[2 * i + 1] * co
    cj = xy[2 * j] * s - xy[2 * j + 1] * co
    cm = xy[2 * m] * s - xy[2 * m + 1] * co
    roots = solve_quadratic_real(2.0 * ci + 2.0 * cj - 4.0 * cm,
                                 -3.0 * ci - cj + 4.0 * cm, ci)
    if roots is ALL_REAL:
        return []
    out = []
    for g in roots:
        if not -1e-6 < g < 1.0 + 1e-6:
            continue
        x, y = _edge_xy(xy, edge, g)
        if x * co + y * s >= -1e-9 * scale:
            out.append(min(max(g, 0.0), 1.0))
    return out


def complex_quadratic_roots(a: complex, b: complex, c: complex) -> list[complex]:
    """Roots of ``a z^2 + b z + c`` over the complex numbers."""
    scale = max(abs(a), abs(b), abs(c))
    if scale == 0.0:
        return []
    if abs(a) <= 1e-14 * scale:
        if abs(b) <= 1e-14 * scale:
            return []
        return [-c / b]
    d = cmath.sqrt(b * b - 4.0 * a * c)
    q = -0.5 * (b + d if (b.conjugate() * d).real >= 0.0 else b - d)
    if q == 0:
        return [0j, 0j]
    return [q / a, c / q]


def bernstein_rho(z: complex, lo: float, hi: float) -> float:
    """Bernstein ellipse parameter of ``z`` for the real interval [lo, hi].

    Gauss-Legendre with ``K`` nodes converges like ``rho**(-2K)`` for a
    function analytic inside the ellipse through its nearest singularity.
    """
    w = (2.0 * z - lo - hi) / (hi - lo)
    s = cmath.sqrt(w * w - 1.0)
    return max(abs(w + s), abs(w - s))


def theta_singularities(xy, edge: int, double: bool, through: bool = False) -> list[complex]:
    """Complex angles where the radial limit on ``edge`` is singular.

    These are the discriminant zeros of the ray-edge quadratic and, when the
    ray crosses the edge twice (``double``), the parabola axis direction
    where the far root escapes to infinity.  For an edge ``through`` the
    origin one root is the origin itself, the discriminant is a perfect
    square, and the other root has its only pole at the axis direction.
    """
    ax, ay = _edge_coeffs(xy, edge)
    if through:
        if math.hypot(ax[2], ay[2]) > 0.0:
            return [complex(math.atan2(ay[2], ax[2]))]
        return []
    P = ax[1] * ax[1] - 4.0 * ax[2] * ax[0]
    R = ay[1] * ay[1] - 4.0 * ay[2] * ay[0]
    Q = -2.0 * ax[1] * ay[1] + 4.0 * (ax[2] * ay[0] + ay[2] * ax[0])
    out = []
    # disc = P s^2 + Q s c + R c^2, solved in tan or cot, whichever is safer
    if abs(P) >= abs(R):
        out += [cmath.atan(t) for t in complex_quadratic_roots(P, Q, R)
                if abs(t * t + 1.0) > 1e-300]
    else:
        out += [math.pi / 2 - cmath.atan(u) for u in complex_quadratic_roots(R, Q, P)
                if abs(u * u + 1.0) > 1e-300]
    if double and math.hypot(ax[2], ay[2]) > 0.0:
        out.append(complex(math.atan2(ay[2], ax[2])))
    return out


def map_singularities(xy, edge: int) -> list[complex]:
    """Complex parameters where the angle along ``edge`` is not analytic.

    These are the zeros of ``x^2 + y^2`` off the real axis; a real zero is
    the origin lying on the edge, where the angle stays analytic.
    """
    ax, ay = _edge_coeffs(xy, edge)
    out = []
    for z in complex_quadratic_roots(complex(ax[2], ay[2]), complex(ax[1], ay[1]),
                                     complex(ax[0], ay[0])):
        if abs(z.imag) > 1e-12 * max(1.0, abs(z)):
            out += [z, z.conjugate()]
    return out


def _to_edge(xy, edge: int, theta: complex, through: bool) -> list[complex]:
    # parameters where the line at complex angle theta meets the edge; on an
    # edge through the origin the root at the origin itself is dropped
    ax, ay = _edge_coeffs(xy, edge)
    s = cmath.sin(theta)
    c = cmath.cos(theta)
    roots = complex_quadratic_roots(s * ax[2] - c * ay[2], s * ax[1] - c * ay[1],
                                    s * ax[0] - c * ay[0])
    if through:
        size = max(abs(v) for v in ax + ay)
        roots = [z for z in roots
                 if abs(ax[0] + z * (ax[1] + z * ax[2])) + abs(ay[0] + z * (ay[1] + z * ay[2]))
                 > 1e-9 * size]
    return roots


def _copies(theta: complex, lo: float, hi: float) -> set[complex]:
    # the line condition is pi-periodic: keep the copies nearest either end
    return {theta + round((t - theta.real) / math.pi) * math.pi for t in (lo, hi)}


def _dedupe(points, lo, hi):
    # drop singularities that nearly coincide relative to their distance
    kept = []
    for z in sorted(points, key=lambda z: _distance(z, lo, hi)[1]):
        d = _distance(z, lo, hi)[1]
        if all(abs(z - k) > 1e-3 * max(d, _distance(k, lo, hi)[1]) for k in kept):
            kept.append(z)
    return kept


def _distance(z: complex, lo: float, hi: float) -> tuple[float, float]:
    p = min(max(z.real, lo), hi)
    return p, abs(z - p)


def graded_cuts(lo: float, hi: float, singular, ratio: float = POLE_RATIO) -> list[float]:
    """Cuts in [lo, hi] graded geometrically towards nearby singularities.

    Each piece next to the point ``p`` of the interval closest to a
    singularity at distance ``d`` grows as ``s_{k+1} = s_k + ratio (s_k + d)``.
    """
    width = hi - lo
    cuts = set()
    for z in singular:
        p, d = _distance(z, lo, hi)
        if d < END_TOL * width or ratio * d >= width:
            continue
        if lo < p < hi:
            cuts.add(p)
        s = 0.0
        while True:
            s = s + ratio * (s + d)
            if s >= width:
                break
            cuts.add(p + s)
            cuts.add(p - s)
    tol = 1e-12 * width
    out = []
    for t in sorted(cuts):
        if lo + tol < t < hi - tol and (not out or t - out[-1] > tol):
            out.append(t)
    return out


def _candidates(xy, ta, tb, hits, scale, tangents):
    # integration variables: plain angle, and the parameter of each crossing
    # whose branch runs monotonically across the interval; a tangency at an
    # end fixes the parameter there exactly
    out = [None]
    for h in hits:
        ends = []
        for t, (e, g) in zip((ta, tb), tangents):
            if e == h.edge:
                ends.append(g)
                continue
            roots = edge_roots(xy, h.edge, t, scale)
            if roots:
                ends.append(min(roots, key=lambda v: abs(v - h.gamma)))
        if len(ends) == 2 and min(ends) < h.gamma < max(ends):
            out.append((h.edge, ends[0], ends[1]))
    return out


def _singular_set(xy, var, edges, doubles, through, ta, tb):
    # (singularities of the radial limits, singularities of the variable map)
    if var is None:
        return [c for f in edges
                for z in theta_singularities(xy, f, f in doubles, f in through)
                for c in _copies(z, ta, tb)], []
    e = var[0]
    out = []
    for f in edges:
        if f == e:
            continue
        for z in theta_singularities(xy, f, f in doubles, f in through):
            out += _to_edge(xy, e, z, e in through)
    return out, map_singularities(xy, e)


def _pieces_in(xy, var, lo, hi, ta, tb, cuts, tangent_ends):
    if var is None:
        points = [lo] + cuts + [hi]
        pieces = []
        for k, (a, b) in enumerate(zip(points[:-1], points[1:])):
            graded = (k == 0 and tangent_ends[0]) or (k == len(points) - 2 and tangent_ends[1])
            pieces.append(AngularPiece(a, b, GRADED if graded else PLAIN))
        return pieces
    e, g_a, g_b = var
    sign = 1.0 if g_b > g_a else -1.0
    params = [g_a] + [g for g in (cuts if sign > 0 else reversed(cuts))] + [g_b]
    angles = [ta]
    for g in params[1:-1]:
        x, y = _edge_xy(xy, e, g)
        angles.append(ta + math.fmod(math.atan2(y, x) - ta + 2.0 * TWO_PI, TWO_PI))
    angles.append(tb)
    return [AngularPiece(angles[k], angles[k + 1], EDGE, e, params[k], params[k + 1])
            for k in range(len(params) - 1)]


def interval_pieces(xy, a, b, r_min: float, scale: float, through=(),
                    ratio: float = POLE_RATIO) -> list[AngularPiece]:
    """Integration variable and graded subdivision of one breakpoint interval.

    ``a`` and ``b`` are breakpoints ``(theta, edge, gamma)``; a nonzero
    ``edge`` marks a ray tangent to that edge at ``gamma``.  ``through``
    lists the edges passing through the origin.
    """
    (ta, ea, ga), (tb, eb, gb) = a, b
    width = tb - ta
    hits = all_ray_hits(xy, 0.5 * (ta + tb), r_min) if width > 1e-10 else []
    if not hits:
        return [AngularPiece(ta, tb, SKIP)]
    edges = sorted({h.edge for h in hits})
    doubles = {e for e in edges if sum(h.edge == e for h in hits) > 1}
    best = None
    for var in _candidates(xy, ta, tb, hits, scale, ((ea, ga), (eb, gb))):
        if var is not None:
            lo, hi = min(var[1], var[2]), max(var[1], var[2])
        else:
            lo, hi = ta, tb
        limits, mapping = _singular_set(xy, var, edges, doubles, through, ta, tb)
        # the variable is chosen on the radial limits alone: a singularity of
        # the map from edge parameter to angle cancels in the area element and
        # is handled by grading
        rho = min((bernstein_rho(z, lo, hi) for z in limits), default=math.inf)
        # ties go to an edge parameter, which integrates that edge exactly
        key = (rho * (1.0 if var is None else 1.0 + 1e-9),)
        if best is None or key > best[0]:
            best = (key, var, lo, hi, _dedupe(limits + mapping, lo, hi))
    _, var, lo, hi, singular = best
    cuts = graded_cuts(lo, hi, singular, ratio)
    # a tangency only limits smoothness when its edge bounds the rays here
    return _pieces_in(xy, var, lo, hi, ta, tb, cuts, (ea in edges, eb in edges))


def angular_pieces(xy, raw, r_min: float, scale: float, through=(),
                   ratio: float = POLE_RATIO) -> list[AngularPiece]:
    """Pieces for all intervals of the closed breakpoint list ``raw``."""
    out = []
    for a, b in zip(raw[:-1], raw[1:]):
        out += interval_pieces(xy, a, b, r_min, scale, through, ratio)
    return out
