"""Pure-Python inner loop of the polar rule (second stage).

Mirrors ``_cpolar.pyx`` line for line; used when the compiled module is
unavailable or disabled with ``CURVEDQUAD_PURE_PYTHON=1``.
"""
from __future__ import annotations

import math

import numpy as np

from .element import edge_to_area, EdgeParam, newton_planar, planar_jacobian
from .errors import DegenerateElementError, RadialParityError
from .geometry import _edge_dxy, _edge_xy, all_ray_hits


def count_points(span: float, delta: float, lo: int, hi: int) -> int:
    """Round ``span / delta`` to the nearest integer and clamp to [lo, hi]."""
    n = int(math.floor(span / delta + 0.5))
    return min(max(n, lo), hi)


def _radii(xy, theta, prepend, r_min):
    hits = all_ray_hits(xy, theta, r_min)
    if prepend:
        return [None] + hits
    return hits


def angular_node(xy, t0, width, mode, edge, g_lo, g_hi, u, wu):
    """Angle and angular weight of the unit-interval Gauss node ``u``.

    ``mode`` 0 maps ``u`` linearly onto the interval, 1 uses the cubic
    grading ``u^2 (3 - 2u)`` which clusters nodes at both ends, and 2 maps
    ``u`` linearly onto ``[g_lo, g_hi]`` on ``edge`` and takes the angle of
    that edge point, with weight ``d theta / d gamma``.
    """
    if mode == 2:
        g = g_lo + (g_hi - g_lo) * u
        x, y = _edge_xy(xy, edge, g)
        dx, dy = _edge_dxy(xy, edge, g)
        return (math.atan2(y, x),
                abs(g_hi - g_lo) * wu * abs(x * dy - y * dx) / (x * x + y * y))
    if mode == 1:
        return t0 + width * u * u * (3.0 - 2.0 * u), width * wu * 6.0 * u * (1.0 - u)
    return t0 + width * u, width * wu


def polar_points(xy, breaks, prepend, modes, ref_edges, g_lo, g_hi, origin_coords,
                 dtheta, dr, kmin, kmax, mmin, mmax, fixed_k, fixed_m, gl_x, gl_w,
                 r_min, newton_tol, scale):
    """Nodes and weights of the polar rule over all angular intervals.

    ``breaks`` is the closed, ascending list of breakpoint angles.  Per
    interval ``prepend`` says whether rays start inside the element at the
    origin, and ``modes``, ``ref_edges``, ``g_lo`` and ``g_hi`` select the
    angular substitution (see :func:`angular_node`).  ``gl_x``/``gl_w`` hold
    Gauss-Legendre tables on [-1, 1], row ``n`` for order ``n``.
    """
    out_xi = []
    out_eta = []
    out_w = []
    det_tol = 1e-14 * scale * scale
    for b in range(len(breaks) - 1):
        t0 = breaks[b]
        width = breaks[b + 1] - t0
        if width < 1e-10:
            continue
        if modes[b] < 0:
            continue
        K = fixed_k if fixed_k > 0 else count_points(width, dtheta, kmin, kmax)
        for k in range(K):
            u = 0.5 * (gl_x[K, k] + 1.0)
            wu = 0.5 * gl_w[K, k]
            theta, wt = angular_node(xy, t0, width, modes[b], ref_edges[b],
                                     g_lo[b], g_hi[b], u, wu)
            radii = _radii(xy, theta, prepend[b], r_min)
            if len(radii) % 2:
                theta += 1e-9 * width
                radii = _radii(xy, theta, prepend[b], r_min)
                if len(radii) % 2:
                    raise RadialParityError(
                        f"odd number of boundary crossings at theta={theta!r}")
            c = math.cos(theta)
            s = math.sin(theta)
            for p in range(0, len(radii), 2):
                entry = radii[p]
                if entry is None:
                    ra = 0.0
                    xi, eta = origin_coords
                else:
                    ra = entry.r
                    xi, eta = edge_to_area(EdgeParam(entry.edge, entry.gamma))
                rb = radii[p + 1].r
                span = rb - ra
                if span <= 0.0:
                    continue
                M = fixed_m if fixed_m > 0 else count_points(span, dr, mmin, mmax)
                for m in range(M):
                    r = ra + span * 0.5 * (gl_x[M, m] + 1.0)
                    wr = span * 0.5 * gl_w[M, m]
                    inv = newton_planar(xy, r * c, r * s, xi, eta, newton_tol)
                    xi, eta = inv.xi, inv.eta
                    det = abs(planar_jacobian(xy, xi, eta))
                    if det < det_tol:
                        raise DegenerateElementError(
                            "projected element is folded (vanishing planar Jacobian)")
                    out_xi.append(xi)
                    out_eta.append(eta)
                    out_w.append(r * wr * wt / det)
    return np.array(out_xi), np.array(out_eta), np.array(out_w)
