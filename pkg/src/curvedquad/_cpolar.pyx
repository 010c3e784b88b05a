# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop of the polar rule.

Same algorithm and argument list as ``curvedquad._polar.polar_points``.
"""
from libc.math cimport sin, cos, sqrt, fabs, floor, hypot, copysign, atan2
from libc.stdlib cimport malloc, realloc, free

import numpy as np
cimport numpy as cnp

from curvedquad.errors import (DegenerateElementError, NewtonConvergenceError,
                               RadialParityError)

cnp.import_array()

cdef int[3][3] EDGES = [[0, 1, 3], [1, 2, 4], [2, 0, 5]]


cdef inline void planar_map(const double *xy, double xi, double eta, double *out) noexcept nogil:
    cdef double s = 1.0 - xi - eta
    cdef double L[6]
    cdef double Lx[6]
    cdef double Le[6]
    cdef double d1 = 4.0 * xi + 4.0 * eta - 3.0
    cdef int k
    L[0] = 2.0 * s * (0.5 - xi - eta)
    L[1] = 2.0 * xi * (xi - 0.5)
    L[2] = 2.0 * eta * (eta - 0.5)
    L[3] = 4.0 * xi * s
    L[4] = 4.0 * xi * eta
    L[5] = 4.0 * eta * s
    Lx[0] = d1
    Lx[1] = 4.0 * xi - 1.0
    Lx[2] = 0.0
    Lx[3] = 4.0 * (1.0 - 2.0 * xi - eta)
    Lx[4] = 4.0 * eta
    Lx[5] = -4.0 * eta
    Le[0] = d1
    Le[1] = 0.0
    Le[2] = 4.0 * eta - 1.0
    Le[3] = -4.0 * xi
    Le[4] = 4.0 * xi
    Le[5] = 4.0 * (1.0 - xi - 2.0 * eta)
    for k in range(6):
        out[k] = 0.0
    for k in range(6):
        out[0] += L[k] * xy[2 * k]
        out[1] += L[k] * xy[2 * k + 1]
        out[2] += Lx[k] * xy[2 * k]
        out[3] += Le[k] * xy[2 * k]
        out[4] += Lx[k] * xy[2 * k + 1]
        out[5] += Le[k] * xy[2 * k + 1]


# returns 0 on success, 1 on too many iterations, 2 on singular Jacobian
cdef int newton(const double *xy, double tx, double ty, double *xi, double *eta,
                double tol, int max_iter, double *res_out) noexcept nogil:
    cdef double f[6]
    cdef double rx, ry, res, det, dxi, deta, step, nxi, neta, nrx, nry, nres
    cdef int it = 0, h
    planar_map(xy, xi[0], eta[0], f)
    rx = tx - f[0]
    ry = ty - f[1]
    res = hypot(rx, ry)
    while res > tol:
        if it >= max_iter:
            res_out[0] = res
            return 1
        det = f[2] * f[5] - f[3] * f[4]
        if det == 0.0:
            res_out[0] = res
            return 2
        dxi = (f[5] * rx - f[3] * ry) / det
        deta = (f[2] * ry - f[4] * rx) / det
        step = 1.0
        for h in range(7):
            nxi = xi[0] + step * dxi
            neta = eta[0] + step * deta
            planar_map(xy, nxi, neta, f)
            nrx = tx - f[0]
            nry = ty - f[1]
            nres = hypot(nrx, nry)
            if nres < res:
                break
            step *= 0.5
        xi[0] = nxi
        eta[0] = neta
        rx = nrx
        ry = nry
        res = nres
        it += 1
    res_out[0] = res
    return 0


cdef int solve_quadratic(double a, double b, double c, double *roots) noexcept nogil:
    # number of real roots; -1 for the zero polynomial
    cdef double scale = fabs(a)
    cdef double disc, q, r1, r2
    if fabs(b) > scale:
        scale = fabs(b)
    if fabs(c) > scale:
        scale = fabs(c)
    if scale == 0.0:
        return -1
    if fabs(a) <= 1e-14 * scale:
        if fabs(b) <= 1e-14 * scale:
            return 0
        roots[0] = -c / b
        return 1
    # normalise so the discriminant cannot underflow or overflow
    a /= scale
    b /= scale
    c /= scale
    disc = b * b - 4.0 * a * c
    if fabs(disc) <= 1e-12 * b * b:
        roots[0] = -b / (2.0 * a)
        return 1
    if disc < 0.0:
        return 0
    q = -0.5 * (b + copysign(sqrt(disc), b))
    r1 = q / a
    r2 = c / q
    if r1 <= r2:
        roots[0] = r1
        roots[1] = r2
    else:
        roots[0] = r2
        roots[1] = r1
    return 2


cdef int ray_hits(const double *xy, double theta, double r_min,
                  double *hr, int *he, double *hg) noexcept nogil:
    cdef double s = sin(theta), co = cos(theta)
    cdef double ci, cj, cm, g, x, y, r, J1, J2, J3
    cdef double roots[2]
    cdef int n = 0, e, i, j, m, nr, q, p
    for e in range(3):
        i = EDGES[e][0]
        j = EDGES[e][1]
        m = EDGES[e][2]
        ci = xy[2 * i] * s - xy[2 * i + 1] * co
        cj = xy[2 * j] * s - xy[2 * j + 1] * co
        cm = xy[2 * m] * s - xy[2 * m + 1] * co
        nr = solve_quadratic(2.0 * ci + 2.0 * cj - 4.0 * cm, -3.0 * ci - cj + 4.0 * cm,
                             ci, roots)
        for q in range(nr):
            g = roots[q]
            if not (0.0 < g < 1.0):
                continue
            J1 = 2.0 * g * g - 3.0 * g + 1.0
            J2 = 2.0 * g * g - g
            J3 = -4.0 * g * g + 4.0 * g
            x = xy[2 * i] * J1 + xy[2 * j] * J2 + xy[2 * m] * J3
            y = xy[2 * i + 1] * J1 + xy[2 * j + 1] * J2 + xy[2 * m + 1] * J3
            if fabs(co) >= fabs(s):
                r = x / co
            else:
                r = y / s
            if r > r_min:
                # insertion sort by radius
                p = n
                while p > 0 and hr[p - 1] > r:
                    hr[p] = hr[p - 1]
                    he[p] = he[p - 1]
                    hg[p] = hg[p - 1]
                    p -= 1
                hr[p] = r
                he[p] = e
                hg[p] = g
                n += 1
    return n


cdef inline int count_points(double span, double delta, int lo, int hi) noexcept nogil:
    cdef int n = <int>floor(span / delta + 0.5)
    if n < lo:
        n = lo
    if n > hi:
        n = hi
    return n


# angle and angular weight of the unit-interval Gauss node u; modes as in
# curvedquad._polar.angular_node
cdef inline void angular_node(const double *xy, double t0, double width, long mode,
                              long edge, double g_lo, double g_hi, double u, double wu,
                              double *theta, double *wt) noexcept nogil:
    cdef double g, J1, J2, J3, D1, D2, D3, x, y, dx, dy
    cdef int i, j, m
    if mode == 2:
        i = EDGES[edge - 1][0]
        j = EDGES[edge - 1][1]
        m = EDGES[edge - 1][2]
        g = g_lo + (g_hi - g_lo) * u
        J1 = 2.0 * g * g - 3.0 * g + 1.0
        J2 = 2.0 * g * g - g
        J3 = -4.0 * g * g + 4.0 * g
        D1 = 4.0 * g - 3.0
        D2 = 4.0 * g - 1.0
        D3 = -8.0 * g + 4.0
        x = xy[2 * i] * J1 + xy[2 * j] * J2 + xy[2 * m] * J3
        y = xy[2 * i + 1] * J1 + xy[2 * j + 1] * J2 + xy[2 * m + 1] * J3
        dx = xy[2 * i] * D1 + xy[2 * j] * D2 + xy[2 * m] * D3
        dy = xy[2 * i + 1] * D1 + xy[2 * j + 1] * D2 + xy[2 * m + 1] * D3
        theta[0] = atan2(y, x)
        wt[0] = fabs(g_hi - g_lo) * wu * fabs(x * dy - y * dx) / (x * x + y * y)
    elif mode == 1:
        theta[0] = t0 + width * u * u * (3.0 - 2.0 * u)
        wt[0] = width * wu * 6.0 * u * (1.0 - u)
    else:
        theta[0] = t0 + width * u
        wt[0] = width * wu


cdef class _Buffer:
    cdef double *xi
    cdef double *eta
    cdef double *w
    cdef Py_ssize_t n, cap

    def __cinit__(self):
        self.cap = 1024
        self.n = 0
        self.xi = <double *>malloc(self.cap * sizeof(double))
        self.eta = <double *>malloc(self.cap * sizeof(double))
        self.w = <double *>malloc(self.cap * sizeof(double))
        if not self.xi or not self.eta or not self.w:
            raise MemoryError()

    def __dealloc__(self):
        free(self.xi)
        free(self.eta)
        free(self.w)

    cdef int push(self, double xi, double eta, double w) except -1:
        cdef double *p
        if self.n == self.cap:
            self.cap *= 2
            p = <double *>realloc(self.xi, self.cap * sizeof(double))
            if not p:
                raise MemoryError()
            self.xi = p
            p = <double *>realloc(self.eta, self.cap * sizeof(double))
            if not p:
                raise MemoryError()
            self.eta = p
            p = <double *>realloc(self.w, self.cap * sizeof(double))
            if not p:
                raise MemoryError()
            self.w = p
        self.xi[self.n] = xi
        self.eta[self.n] = eta
        self.w[self.n] = w
        self.n += 1
        return 0

    cdef object arrays(self):
        cdef Py_ssize_t k
        cdef cnp.ndarray[cnp.float64_t] a = np.empty(self.n)
        cdef cnp.ndarray[cnp.float64_t] b = np.empty(self.n)
        cdef cnp.ndarray[cnp.float64_t] c = np.empty(self.n)
        for k in range(self.n):
            a[k] = self.xi[k]
            b[k] = self.eta[k]
            c[k] = self.w[k]
        return a, b, c


def polar_points(xy_in, breaks_in, prepend_in, modes_in, edges_in, g_lo_in, g_hi_in,
                 origin_coords,
                 double dtheta, double dr, int kmin, int kmax, int mmin, int mmax,
                 int fixed_k, int fixed_m, const double[:, ::1] gl_x, const double[:, ::1] gl_w,
                 double r_min, double newton_tol, double scale):
    cdef double xy[12]
    cdef int q
    for q in range(12):
        xy[q] = xy_in[q]
    cdef double[::1] breaks = np.ascontiguousarray(breaks_in, dtype=np.float64)
    cdef long[::1] prepend = np.ascontiguousarray(prepend_in, dtype=np.int_)
    cdef long[::1] modes = np.ascontiguousarray(modes_in, dtype=np.int_)
    cdef long[::1] ref_edges = np.ascontiguousarray(edges_in, dtype=np.int_)
    cdef double[::1] g_lo = np.ascontiguousarray(g_lo_in, dtype=np.float64)
    cdef double[::1] g_hi = np.ascontiguousarray(g_hi_in, dtype=np.float64)
    cdef double xi0 = 0.0, eta0 = 0.0
    if origin_coords is not None:
        xi0 = origin_coords[0]
        eta0 = origin_coords[1]
    cdef double det_tol = 1e-14 * scale * scale
    cdef _Buffer buf = _Buffer()
    cdef double hr[7]
    cdef int he[7]
    cdef double hg[7]
    cdef int nb = breaks.shape[0], b, K, k, nh, p, M, m, start, status, e, tries
    cdef double t0, width, u, wu, theta, wt, c, s, ra, rb, span, r, wr, xi, eta, res, det
    cdef double f[6]
    for b in range(nb - 1):
        t0 = breaks[b]
        width = breaks[b + 1] - t0
        if width < 1e-10 or modes[b] < 0:
            continue
        K = fixed_k if fixed_k > 0 else count_points(width, dtheta, kmin, kmax)
        for k in range(K):
            u = 0.5 * (gl_x[K, k] + 1.0)
            wu = 0.5 * gl_w[K, k]
            angular_node(xy, t0, width, modes[b], ref_edges[b], g_lo[b], g_hi[b],
                         u, wu, &theta, &wt)
            for tries in range(2):
                nh = ray_hits(xy, theta, r_min, hr, he, hg)
                if (nh + (1 if prepend[b] else 0)) % 2 == 0:
                    break
                if tries == 0:
                    theta += 1e-9 * width
                else:
                    raise RadialParityError(
                        f"odd number of boundary crossings at theta={theta!r}")
            c = cos(theta)
            s = sin(theta)
            # entries/exits: with prepend the first segment starts at r=0
            p = 0
            start = 1 if prepend[b] else 0
            while p < nh + start:
                if start and p == 0:
                    ra = 0.0
                    xi = xi0
                    eta = eta0
                    rb = hr[0]
                else:
                    ra = hr[p - start]
                    e = he[p - start]
                    if e == 0:
                        xi = hg[p - start]
                        eta = 0.0
                    elif e == 1:
                        xi = 1.0 - hg[p - start]
                        eta = hg[p - start]
                    else:
                        xi = 0.0
                        eta = 1.0 - hg[p - start]
                    rb = hr[p + 1 - start]
                p += 2
                span = rb - ra
                if span <= 0.0:
                    continue
                M = fixed_m if fixed_m > 0 else count_points(span, dr, mmin, mmax)
                for m in range(M):
                    r = ra + span * 0.5 * (gl_x[M, m] + 1.0)
                    wr = span * 0.5 * gl_w[M, m]
                    status = newton(xy, r * c, r * s, &xi, &eta, newton_tol, 30, &res)
                    if status == 1:
                        raise NewtonConvergenceError(
                            f"Newton inversion did not converge (residual {res:.3e})",
                            target=(r * c, r * s), residual=res)
                    elif status == 2:
                        raise NewtonConvergenceError(
                            "singular Jacobian in Newton inversion",
                            target=(r * c, r * s), residual=res)
                    planar_map(xy, xi, eta, f)
                    det = fabs(f[2] * f[5] - f[3] * f[4])
                    if det < det_tol:
                        raise DegenerateElementError(
                            "projected element is folded (vanishing planar Jacobian)")
                    buf.push(xi, eta, r * wr * wt / det)
    return buf.arrays()
