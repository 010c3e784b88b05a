"""Time the compiled and pure-Python polar kernels side by side.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--configs 60] [--refinement 1]

Three workloads are timed for each available backend: the six demo cases,
random (element, field point) configurations of every origin class, and the
assembly of a sphere mesh.  The rules are also compared point by point.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from curvedquad import backend
from curvedquad.bem import assemble
from curvedquad.mesh import sphere_mesh
from curvedquad.quadrature import ACCURATE, RuleSelection, build_rule
from curvedquad.samples import (ORIGIN_CLASSES, demo_element, demo_field_point,
                                random_configuration)


def best_of(repeat, fn):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(n_configs, refinement):
    rng = np.random.default_rng(0)
    configs = [random_configuration(rng, ORIGIN_CLASSES[k % len(ORIGIN_CLASSES)])
               for k in range(n_configs)]
    demo = [(demo_element(), demo_field_point(c)) for c in range(1, 7)]
    mesh = sphere_mesh(refinement)
    return {
        "demo cases (default)": lambda: [build_rule(t, x) for t, x in demo],
        "demo cases (accurate)": lambda: [build_rule(t, x, ACCURATE) for t, x in demo],
        f"{n_configs} random configs": lambda: [build_rule(t, x) for t, x in configs],
        f"sphere assembly r={refinement}": lambda: assemble(mesh, RuleSelection()),
    }, configs


def max_difference(configs):
    worst = 0.0
    for tri, x in configs:
        rules = []
        for name in ("python", "compiled"):
            backend.use(name)
            rules.append(build_rule(tri, x))
        a, b = rules
        worst = max(worst, float(np.max(np.abs(a.w - b.w) / np.abs(b.w))))
    return worst


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--configs", type=int, default=60)
    parser.add_argument("--refinement", type=int, default=1)
    args = parser.parse_args(argv)

    names = [n for n in ("python", "compiled") if n in backend.BACKENDS]
    jobs, configs = workloads(args.configs, args.refinement)
    initial = backend.active()
    print(f"{'workload':28s}" + "".join(f"{n:>12s}" for n in names)
          + ("     speedup" if len(names) == 2 else ""))
    for label, job in jobs.items():
        row = []
        for name in names:
            backend.use(name)
            row.append(best_of(args.repeat, job))
        line = f"{label:28s}" + "".join(f"{t:11.3f}s" for t in row)
        if len(row) == 2:
            line += f"{row[0] / row[1]:11.1f}x"
        print(line)
    if len(names) == 2:
        print(f"max relative weight difference python vs compiled: {max_difference(configs):.2e}")
    else:
        print("compiled backend not built; only the pure-Python kernel was timed")
    backend.use(initial)


if __name__ == "__main__":
    main()
