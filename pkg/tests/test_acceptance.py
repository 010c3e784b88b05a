"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` (lines are written to the
terminal) or directly with ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import sys
import time

import numpy as np
import pytest

from curvedquad import CurvedTriangle, EdgeParam, RuleSelection, build_rule, fallback_rule
from curvedquad.bem import (PointSource, assemble, green, layer_moments, panel_integrals,
                            run_case)
from curvedquad.cli import dump_points
from curvedquad.element import (edge_point, in_reference_triangle, interpolate, newton_invert,
                                shape_functions, surface_jacobian)
from curvedquad.geometry import (build_reference_frame, edge_tangent_angle, locate_origin,
                                 solve_quadratic_real)
from curvedquad.mesh import sphere_mesh, split_to_linear
from curvedquad.quadrature import ACCURATE, radial_limits
from curvedquad.samples import (DEMO_CASES, ORIGIN_CLASSES, demo_element, demo_field_point,
                                random_configuration, random_element, random_rotation)

def report(number: int, name: str, ok: bool, detail: str, seconds: float, budget: float,
           capsys=None) -> None:
    """Print one PASS/FAIL line (past pytest's capture) and assert on it."""
    ok = ok and seconds < budget
    line = (f"{'PASS' if ok else 'FAIL'} criterion {number} {name}: {detail} "
            f"[{seconds:.1f} s, budget {budget:.0f} s]")
    if capsys is None:
        print(line, flush=True)
    else:
        with capsys.disabled():
            print("\n" + line, flush=True)
    assert ok, line


def _dirichlet(a: int, b: int) -> float:
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def _moments(tri, x, rule):
    J, n = surface_jacobian(tri, rule.xi, rule.eta)
    G, dG = green(x, interpolate(tri, rule.xi, rule.eta), n)
    L = shape_functions(rule.xi, rule.eta)
    jw = J * rule.w
    return L @ (G * jw), L @ (dG * jw)


def test_c1_weight_sum(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = {k: 0.0 for k in ORIGIN_CLASSES}
    n = 200
    for k in range(n):
        kind = ORIGIN_CLASSES[k % len(ORIGIN_CLASSES)]
        tri, x = random_configuration(rng, kind)
        worst[kind] = max(worst[kind], abs(build_rule(tri, x, ACCURATE).weight_sum - 0.5))
    err = max(worst.values())
    per = " ".join(f"{k}={v:.1e}" for k, v in worst.items())
    report(1, "weight sum", err < 1e-8,
           f"{n} configurations, max |sum(w) - 1/2| = {err:.2e} < 1e-8 ({per})",
           time.perf_counter() - t0, 30, capsys)


def test_c2_monomial_exactness(capsys):
    t0 = time.perf_counter()
    tri = CurvedTriangle.flat([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    points = {"inside": (0.3, 0.25, 0.0), "vertex": (0.0, 0.0, 0.0), "edge": (0.5, 0.5, 0.0),
              "above": (0.2, 0.2, 0.4), "outside": (1.2, 0.9, 0.0), "beside": (-0.5, 0.3, 0.0),
              "far above": (2.0, 2.0, 0.3)}

    def worst_error(sel, names):
        worst = 0.0
        for name in names:
            rule = build_rule(tri, points[name], sel)
            J, _ = surface_jacobian(tri, rule.xi, rule.eta)
            for a in range(7):
                for b in range(7 - a):
                    value = np.sum(rule.xi ** a * rule.eta ** b * J * rule.w)
                    worst = max(worst, abs(value / _dirichlet(a, b) - 1.0))
        return worst

    worst = worst_error(ACCURATE, points)
    on = worst_error(RuleSelection(), ["inside", "vertex", "edge", "above"])
    off = worst_error(RuleSelection(), ["outside", "beside", "far above"])
    report(2, "monomial exactness", worst < 1e-8,
           f"a+b <= 6 at {len(points)} field points, max relative error {worst:.2e} < 1e-8 "
           f"(default selection: {on:.1e} for origins on the element, {off:.1e} outside)",
           time.perf_counter() - t0, 5, capsys)


def test_c3_cross_method(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = [0.0, 0.0]
    for _ in range(50):
        tri = random_element(rng)
        rho = math.sqrt(2.0) * tri.bounding_radius
        d = rng.normal(size=3)
        x = tri.centroid + rng.uniform(2.0, 5.0) * rho * d / np.linalg.norm(d)
        polar = _moments(tri, x, build_rule(tri, x, ACCURATE))
        fixed = _moments(tri, x, fallback_rule())
        for i in range(2):
            worst[i] = max(worst[i], np.abs(polar[i] - fixed[i]).max() / np.abs(fixed[i]).max())
    report(3, "cross-method oracle", max(worst) < 1e-6,
           f"50 curved elements, sigma in [2, 5]: single layer {worst[0]:.2e}, "
           f"double layer {worst[1]:.2e} < 1e-6", time.perf_counter() - t0, 60, capsys)


def _on_element_points(rng, n):
    for k in range(n):
        tri = random_element(rng)
        kind = k % 3
        if kind == 0:
            a, b, _ = rng.dirichlet([1.0, 1.0, 1.0])
            yield tri, interpolate(tri, a, b)
        elif kind == 1:
            yield tri, tri.corners[k % 3]
        else:
            yield tri, edge_point(tri, EdgeParam(int(rng.integers(1, 4)), rng.uniform(0.05, 0.95)))


def test_c4_self_term_stability(capsys):
    t0 = time.perf_counter()
    coarse = RuleSelection(n_theta=8, n_r=8, k_min=ACCURATE.k_min, m_min=ACCURATE.m_min)
    fine = RuleSelection(n_theta=16, n_r=16, k_min=ACCURATE.k_min, m_min=ACCURATE.m_min)
    worst = 0.0
    worst_default = 0.0
    for tri, x in _on_element_points(np.random.default_rng(5), 60):
        s8, _ = panel_integrals(tri, x, coarse)
        s16, _ = panel_integrals(tri, x, fine)
        worst = max(worst, np.abs(s8 - s16).max() / np.abs(s16).max())
        d8, _ = panel_integrals(tri, x, RuleSelection(n_theta=8, n_r=8))
        d16, _ = panel_integrals(tri, x, RuleSelection(n_theta=16, n_r=16))
        worst_default = max(worst_default, np.abs(d8 - d16).max() / np.abs(d16).max())
    report(4, "self-term stability", worst < 1e-5,
           f"60 on-element points, N 8 -> 16 with K_min={ACCURATE.k_min}, M_min={ACCURATE.m_min}: "
           f"{worst:.2e} < 1e-5 (default K_min=M_min=4: {worst_default:.2e})",
           time.perf_counter() - t0, 10, capsys)


def test_c5_gauss_flux(capsys):
    t0 = time.perf_counter()
    mesh = sphere_mesh(2)
    _, A, _ = layer_moments(mesh, [[0.0, 0.0, 0.0]])
    flux = float(A.sum())
    prob = assemble(mesh)
    dev = float(np.abs(prob.corner - 0.5).max())
    report(5, "Gauss flux identity", abs(flux + 1.0) < 2e-3 and dev < 1e-2,
           f"refinement 2: centre flux {flux:.8f} (|+1| < 2e-3), "
           f"max |c_i - 1/2| = {dev:.2e} < 1e-2 over {mesh.n_nodes} nodes",
           time.perf_counter() - t0, 120, capsys)


@pytest.mark.slow
def test_c6_convergence(capsys):
    t0 = time.perf_counter()
    src = PointSource((-0.2, -0.2, -0.2))
    quad, lin = [], []
    for r in range(3):
        mesh = sphere_mesh(r)
        quad.append((mesh.n_elements, run_case(mesh, src)[0]))
        linear = split_to_linear(mesh)
        lin.append((linear.n_elements, run_case(linear, src)[0]))
    sq = np.polyfit(np.log([p for p, _ in quad]), np.log([e for _, e in quad]), 1)[0]
    sl = np.polyfit(np.log([p for p, _ in lin]), np.log([e for _, e in lin]), 1)[0]
    errs = " ".join(f"{e:.2e}" for _, e in quad)
    report(6, "convergence study", sq <= -1.3 and sq < sl,
           f"quadratic slope {sq:.3f} <= -1.3 (rms {errs}), split-linear slope {sl:.3f}",
           time.perf_counter() - t0, 600, capsys)


def _in_arc(angles, lo, hi):
    # angles strictly inside the counter-clockwise arc from lo to hi
    span = (hi - lo) % (2 * math.pi)
    rel = (angles - lo) % (2 * math.pi)
    return (rel > 1e-12) & (rel < span - 1e-12)


def _is_break(theta, breaks):
    return any(abs((theta - b + math.pi) % (2 * math.pi) - math.pi) < 1e-9 for b in breaks)


def _structure(case, name, tri, sel):
    rows, total = dump_points(case, sel)
    xy, xi, eta, w = rows[:, :2], rows[:, 2], rows[:, 3], rows[:, 4]
    problems = []
    if abs(total - 0.5) >= 1e-8:
        problems.append(f"sum(w) off by {abs(total - 0.5):.1e}")
    if not np.all(w > 0):
        problems.append("non-positive weight")
    if not all(in_reference_triangle(a, b, 1e-9) for a, b in zip(xi, eta)):
        problems.append("node outside the reference triangle")
    x = demo_field_point(case)
    proj = build_reference_frame(tri, x)
    loc = locate_origin(proj)
    breaks = build_rule(tri, x, sel).breakpoints
    angles = np.mod(np.arctan2(xy[:, 1], xy[:, 0]), 2 * math.pi)
    corner = [math.atan2(c[1], c[0]) % (2 * math.pi) for c in proj.planar_nodes[:3]]
    dist = [float(np.hypot(*c)) for c in proj.planar_nodes[:3]]
    # angular wedge occupied by the points: the complement of the widest gap
    ordered = np.sort(angles)
    gaps = np.diff(np.concatenate([ordered, ordered[:1] + 2 * math.pi]))
    k = int(np.argmax(gaps))
    lo, hi = ordered[(k + 1) % len(ordered)] - 1e-9, ordered[k] + 1e-9

    def split_by(theta, what):
        # theta is a breakpoint with points on both sides of it
        if not _is_break(theta, breaks):
            problems.append(f"{what} is not a breakpoint")
        elif not (np.any(_in_arc(angles, lo, theta)) and np.any(_in_arc(angles, theta, hi))):
            problems.append(f"{what} does not separate two domains")

    if name == "inside":
        # divided by the rays to the three corners
        for k, t in enumerate(corner):
            if not _is_break(t, breaks):
                problems.append(f"corner {k + 1} ray is not a breakpoint")
        for a, b in zip(breaks[:-1], breaks[1:]):
            if not np.any(_in_arc(angles, a, b)):
                problems.append("empty wedge between corner rays")
    elif name == "vertex":
        # two domains separated by the tangent of the curved edge at the corner
        k = loc.corner
        edge = (k + 1) % 3 + 1  # the edge ending at this corner
        theta, _ = edge_tangent_angle(proj.xy, edge, 1.0)
        split_by(theta % (2 * math.pi), "curved-edge tangent at the corner")
    elif name == "outside":
        # two domains separated by the ray to the most distant corner
        split_by(corner[int(np.argmax(dist))], "ray to the most distant corner")
    else:
        e = loc.edge
        tangents = [t % (2 * math.pi) for t in edge_tangent_angle(proj.xy, e.edge, e.gamma)]
        ends = [corner[e.edge - 1], corner[e.edge % 3]]
        if name == "straight":
            # two regions separated by the ray to the furthest corner, all on
            # one side of the edge line
            split_by(corner[int(np.argmax(dist))], "ray to the furthest corner")
            d = (math.cos(tangents[0]), math.sin(tangents[0]))
            side = d[0] * xy[:, 1] - d[1] * xy[:, 0]
            if not (np.all(side >= -1e-12) or np.all(side <= 1e-12)):
                problems.append("points on both sides of the straight edge")
        else:
            for t in tangents:
                if not _is_break(t, breaks):
                    problems.append("tangent at the origin is not a breakpoint")
            # thin regions between each tangent and the ray to the nearer end
            # vertex of the edge: bounded by the edge and the vertex rays when
            # convex, by the edge and the tangent when concave
            for t in tangents:
                v = min(ends, key=lambda c: abs((c - t + math.pi) % (2 * math.pi) - math.pi))
                arc = (t, v) if (v - t) % (2 * math.pi) < math.pi else (v, t)
                if not np.any(_in_arc(angles, *arc)):
                    problems.append("no thin region between the tangent and a vertex ray")
    return [f"{name}: {p}" for p in problems]


def test_c7_figure_four_structure(capsys):
    t0 = time.perf_counter()
    sel = RuleSelection(fixed_counts=(16, 16))
    tri = demo_element()
    problems = []
    for case, (name, _) in sorted(DEMO_CASES.items()):
        problems += _structure(case, name, tri, sel)
    report(7, "point-set structure", not problems,
           "six demo cases, 16 x 16 fixed counts: sum(w), positivity, containment, partition"
           + ("" if not problems else " -- " + "; ".join(problems)),
           time.perf_counter() - t0, 5, capsys)


def test_c8_property_suites(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    n = 10_000
    failures = {"roots": 0, "newton": 0, "rigid": 0, "parity": 0}

    for _ in range(n):
        a, b, c = rng.normal(size=3) * 10.0 ** rng.uniform(-3, 3, size=3)
        scale = max(abs(a), abs(b), abs(c))
        for g in solve_quadratic_real(a, b, c):
            bound = 1e-10 * scale * max(1.0, g * g)
            if abs((a * g + b) * g + c) > bound:
                failures["roots"] += 1

    elements = [random_element(rng) for _ in range(200)]
    for k in range(n):
        tri = elements[k % len(elements)]
        a, b, _ = rng.dirichlet([1.0, 1.0, 1.0])
        proj = build_reference_frame(tri, tri.centroid)
        target = proj.to_local(interpolate(tri, a, b))[:2]
        inv = newton_invert(proj, target)
        if abs(inv.xi - a) + abs(inv.eta - b) > 1e-9:
            failures["newton"] += 1

    for k in range(n):
        kind = ORIGIN_CLASSES[k % len(ORIGIN_CLASSES)]
        tri, x = random_configuration(rng, kind)
        proj = build_reference_frame(tri, x)
        loc = locate_origin(proj)
        try:
            radial_limits(proj, rng.uniform(0.0, 2 * math.pi), loc)
        except ArithmeticError:
            failures["parity"] += 1
        # rigid motion of element and field point together
        q = random_rotation(rng)
        t = rng.uniform(-3.0, 3.0, size=3)
        s0, _ = panel_integrals(tri, x)
        s1, _ = panel_integrals(CurvedTriangle(tri.nodes @ q.T + t), x @ q.T + t)
        if np.abs(s0 - s1).max() > 1e-10 * np.abs(s0).max():
            failures["rigid"] += 1
    counts = {"roots": n, "newton": n, "rigid": n, "parity": n}
    detail = ", ".join(f"{k} {failures[k]}/{counts[k]} failed" for k in failures)
    report(8, "property suites", not any(failures.values()), detail, time.perf_counter() - t0, 120, capsys)


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_c")]
    failed = 0
    for fn in tests:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
