"""Command-line driver.

Subcommands
-----------
rule         build the rule of one element and field point
dump-points  planar point sets of the six demo cases
convergence  Laplace Neumann solves on a mesh sequence with slope fits
selfcheck    weight-sum, monomial and flux checks

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bem
from .element import CurvedTriangle, interpolate
from .errors import CurvedQuadError, DegenerateElementError, MeshFormatError
from .geometry import build_reference_frame
from .mesh import read_msh, sphere_mesh, split_to_linear
from .quadrature import (ACCURATE, RuleSelection, build_rule, fallback_rule, format_rule,
                         select_rule)
from .samples import (DEMO_CASES, ORIGIN_CLASSES, demo_element, demo_field_point,
                      random_configuration)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2
DEFAULT_SOURCE = (-0.2, -0.2, -0.2)


class InputError(Exception):
    """Invalid command-line input (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _vector(text: str) -> tuple[float, float, float]:
    try:
        parts = [float(v) for v in text.replace(" ", "").split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from None
    if len(parts) != 3 or not all(math.isfinite(v) for v in parts):
        raise argparse.ArgumentTypeError(f"expected three finite numbers, got {text!r}")
    return tuple(parts)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _selection_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("rule selection")
    g.add_argument("--ntheta", type=_positive_int, default=8, help="angular density N_theta")
    g.add_argument("--nr", type=_positive_int, default=8, help="radial density N_r")
    g.add_argument("--sigma-threshold", type=float, default=1.0,
                   help="use the polar rule when sigma is below this value")
    g.add_argument("--fixed-counts", type=_positive_int, nargs=2, metavar=("K", "M"),
                   help="fixed Gauss counts per angular interval and radial pair")
    return p


def _selection(args) -> RuleSelection:
    try:
        return RuleSelection(n_theta=args.ntheta, n_r=args.nr,
                             sigma_threshold=args.sigma_threshold,
                             fixed_counts=tuple(args.fixed_counts) if args.fixed_counts else None)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_element(args) -> CurvedTriangle:
    if args.element:
        try:
            nodes = np.loadtxt(args.element, dtype=float, ndmin=2)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read element file: {exc}") from exc
    else:
        try:
            nodes = np.array([[float(v) for v in row.split(",")]
                              for row in args.nodes.split(";")])
        except ValueError as exc:
            raise InputError(f"cannot parse --nodes: {exc}") from exc
    if nodes.shape != (6, 3):
        raise InputError(f"element needs 6 nodes with 3 coordinates, got shape {nodes.shape}")
    try:
        return CurvedTriangle(nodes)
    except (DegenerateElementError, ValueError) as exc:
        raise InputError(f"invalid element: {exc}") from exc


def cmd_rule(args) -> int:
    tri = _read_element(args)
    sel = _selection(args)
    rule = build_rule(tri, args.point, sel) if args.force_polar else select_rule(tri, args.point, sel)
    _emit(format_rule(rule), args.out)
    total = rule.weight_sum
    print(f"points {len(rule)}  sum(w) = {total:.17g}  |sum(w) - 1/2| = {abs(total - 0.5):.3e}",
          file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def dump_points(case: int, sel: RuleSelection) -> tuple[np.ndarray, float]:
    """Rows ``x y xi eta w`` of a demo case in its reference frame, and sum(w)."""
    tri = demo_element()
    x = demo_field_point(case)
    rule = build_rule(tri, x, sel)
    proj = build_reference_frame(tri, x)
    planar = proj.to_local(interpolate(tri, rule.xi, rule.eta))[:, :2]
    return np.column_stack([planar, rule.xi, rule.eta, rule.w]), rule.weight_sum


def cmd_dump_points(args) -> int:
    if args.case not in DEMO_CASES:
        raise InputError(f"case must be 1..6, got {args.case}")
    rows, total = dump_points(args.case, _selection(args))
    name = DEMO_CASES[args.case][0]
    lines = [f"# case {args.case} ({name})", f"# sum(w) {total:.17g}", "# x y xi eta w"]
    lines += [" ".join(f"{v:.17g}" for v in row) for row in rows]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def convergence_study(meshes, src: bem.PointSource, sel: RuleSelection, linear: bool = True,
                      log=None) -> dict:
    """Solve on each ``(refinement, mesh)`` for both element variants.

    Returns ``{"records": [...], "fits": {variant: {"a", "slope"}}}``.
    """
    records = []
    variants = ["quadratic"] + (["linear"] if linear else [])
    for ref, mesh in meshes:
        for variant in variants:
            m = mesh if variant == "quadratic" else split_to_linear(mesh)
            try:
                err, seconds, _ = bem.run_case(m, src, sel)
            except CurvedQuadError as exc:
                raise CurvedQuadError(f"{variant} solve failed at refinement {ref}: {exc}") from exc
            rec = bem.ConvergenceRecord(variant, ref, m.n_elements, m.n_nodes, err, seconds)
            records.append(rec)
            if log:
                log(rec)
    fits = {}
    for variant in variants:
        rs = [r for r in records if r.variant == variant]
        a, b = bem.fit_slope([r.P for r in rs], [r.rms for r in rs])
        fits[variant] = {"a": a, "slope": b}
    return {"records": [r.as_dict() for r in records], "fits": fits}


def cmd_convergence(args) -> int:
    sel = _selection(args)
    if args.mesh:
        try:
            meshes = [(k, read_msh(path)) for k, path in enumerate(args.mesh)]
        except (OSError, MeshFormatError) as exc:
            raise InputError(str(exc)) from exc
        if any(m.order != 2 for _, m in meshes):
            raise InputError("convergence meshes must contain six-node triangles")
    else:
        if args.sphere < 0 or args.min_refinement < 0 or args.min_refinement > args.sphere:
            raise InputError("need 0 <= --min-refinement <= --sphere")
        meshes = [(r, sphere_mesh(r)) for r in range(args.min_refinement, args.sphere + 1)]
    src = bem.PointSource(args.source, args.strength)

    print(f"{'variant':10s} {'ref':>3s} {'P':>6s} {'N':>6s} {'rms error':>12s} {'seconds':>8s}")

    def log(r):
        print(f"{r.variant:10s} {r.refinement:3d} {r.P:6d} {r.N:6d} {r.rms:12.4e} {r.seconds:8.2f}",
              flush=True)

    report = convergence_study(meshes, src, sel, linear=not args.no_linear, log=log)
    for variant, fit in report["fits"].items():
        print(f"fit {variant:10s} rms ~ {fit['a']:.3g} P^{fit['slope']:.3f}")
    report["source"] = list(args.source)
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def selfcheck(seed: int = 0, n_random: int = 60, fallback=None, sel: RuleSelection = ACCURATE,
              refinement: int = 1) -> list[tuple[str, bool, str]]:
    """Run the invariant checks; returns ``(name, passed, detail)`` rows.

    ``fallback`` replaces the symmetric rule in the monomial check (a hook
    for negative controls).
    """
    rows = []
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(n_random):
        tri, x = random_configuration(rng, ORIGIN_CLASSES[k % len(ORIGIN_CLASSES)])
        worst = max(worst, abs(build_rule(tri, x, sel).weight_sum - 0.5))
    rows.append(("weight sums", worst < 1e-8, f"max |sum(w) - 1/2| = {worst:.2e} ({n_random} cases)"))

    for case in sorted(DEMO_CASES):
        _, total = dump_points(case, sel)
        rows.append((f"demo case {case}", abs(total - 0.5) < 1e-8, f"|sum(w) - 1/2| = {abs(total - 0.5):.2e}"))

    flat = CurvedTriangle.flat([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    polar = build_rule(flat, [0.3, 0.25, 0.0], sel)
    rule = fallback_rule() if fallback is None else fallback
    for name, r, degree in (("polar monomials", polar, 6), ("fallback monomials", rule, 10)):
        worst = max(abs(np.sum(r.xi ** a * r.eta ** b * r.w) / _dirichlet(a, b) - 1.0)
                    for a in range(degree + 1) for b in range(degree + 1 - a))
        rows.append((name, worst < 1e-8, f"max relative error {worst:.2e} (degree {degree})"))

    mesh = sphere_mesh(refinement)
    _, A, _ = bem.layer_moments(mesh, [[0.0, 0.0, 0.0]])
    flux = float(A.sum())
    rows.append(("flux identity", abs(flux + 1.0) < 2e-3, f"sum of double layer at centre = {flux:.6f}"))
    return rows


def _dirichlet(a: int, b: int) -> float:
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def cmd_selfcheck(args) -> int:
    rows = selfcheck(seed=args.seed)
    width = max(len(r[0]) for r in rows)
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name:{width}s}  {detail}")
    failed = sum(not ok for _, ok, _ in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="curvedquad", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sel = _selection_flags()

    p = sub.add_parser("rule", parents=[sel], help="build the rule of one element")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--element", help="text file with 6 rows x y z")
    src.add_argument("--nodes", help="inline nodes 'x,y,z;x,y,z;...' (6 nodes)")
    p.add_argument("--point", type=_vector, required=True, help="field point x,y,z")
    p.add_argument("--force-polar", action="store_true",
                   help="use the polar rule regardless of sigma")
    p.add_argument("--out", help="write the rule to this file instead of stdout")
    p.set_defaults(func=cmd_rule)

    p = sub.add_parser("dump-points", parents=[sel], help="point set of a demo case")
    p.add_argument("case", type=int, help="1 inside, 2 vertex, 3 outside, 4 straight, "
                                          "5 convex, 6 concave edge")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_dump_points)

    p = sub.add_parser("convergence", parents=[sel], help="Laplace Neumann convergence study")
    geo = p.add_mutually_exclusive_group()
    geo.add_argument("--sphere", type=int, default=2, metavar="R",
                     help="unit-sphere refinements up to R (default 2)")
    geo.add_argument("--mesh", action="append", metavar="FILE",
                     help="GMSH 2.2 file; repeat for a sequence")
    p.add_argument("--min-refinement", type=int, default=0)
    p.add_argument("--source", type=_vector, default=DEFAULT_SOURCE, help="point source x,y,z")
    p.add_argument("--strength", type=float, default=1.0)
    p.add_argument("--no-linear", action="store_true", help="skip the split-linear variant")
    p.add_argument("--out", help="write the records as JSON")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("selfcheck", help="run the invariant checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CurvedQuadError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # output consumer closed early (e.g. piped into head)
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
