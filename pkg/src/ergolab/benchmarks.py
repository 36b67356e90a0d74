"""Timing comparison of the window engines on real workloads.

    python -m ergolab.benchmarks [--repeat K]

Runs the same exact window sweeps through the pure-Python segment
engine and (when built) the compiled per-atom kernel, asserts the
reports are identical, and prints a timing table.  Exits nonzero on any
mismatch, so this doubles as an install check.
"""
from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction

from . import krengel, podvigin
from .rates import Rate
from .windows import HAVE_KERNEL, window_stats


def _workloads():
    F = Fraction
    psi = Rate.power(F(1, 2))

    plan = krengel.select_heights(psi, 3)
    kw = krengel.build_witness(plan)
    tail = {2, 3}
    yield ("tower tail, N=h_1", kw.system, {1}, tail,
           plan.heights[0], kw.mean, F(0))
    yield ("tower tail, N=h_2", kw.system, {1}, tail,
           plan.heights[1], kw.mean, F(0))
    yield ("tower total, N=h_2", kw.system, {1}, None,
           plan.heights[1], kw.mean, F(0))

    spec = podvigin.ComponentSpec.build((F(3, 10), F(3, 10),
                                         F(2, 10), F(2, 10)))
    pw = podvigin.run_all(spec, psi)
    sys_p = pw.state.merged
    for rec in pw.state.history[:-1]:
        yield (f"merged stage check, N={rec.N}", sys_p, {0},
               set(range(rec.j + 1)), rec.N, rec.c_j, rec.eps)
    yield ("merged divergence, N=60", sys_p, {0}, None,
           60, spec.c, F(7, 40))


def _time(fn, repeat):
    best = None
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return out, best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="compare the window engines on shared workloads")
    parser.add_argument("--repeat", type=int, default=3,
                        help="timing repetitions, best-of (default 3)")
    args = parser.parse_args(argv)

    print(f"{'workload':38} {'L':>9} {'N':>9} "
          f"{'py [s]':>9} {'cy [s]':>9} {'speedup':>8}")
    mismatches = 0
    for name, ir, f, r, n, c, eps in _workloads():
        py_rep, py_t = _time(
            lambda: window_stats(ir, f, r, n, c, eps, engine="py"),
            args.repeat)
        if HAVE_KERNEL:
            cy_rep, cy_t = _time(
                lambda: window_stats(ir, f, r, n, c, eps, engine="cy"),
                args.repeat)
            equal = cy_rep == py_rep
            if not equal:
                mismatches += 1
            print(f"{name:38} {ir.length:>9} {n:>9} "
                  f"{py_t:>9.4f} {cy_t:>9.4f} {py_t / cy_t:>7.1f}x"
                  f"{'' if equal else '  MISMATCH'}")
        else:
            print(f"{name:38} {ir.length:>9} {n:>9} "
                  f"{py_t:>9.4f} {'-':>9} {'-':>8}")
    if not HAVE_KERNEL:
        print("compiled kernel not built: timed the segment engine only")
    elif mismatches:
        print(f"{mismatches} engine mismatch(es)", file=sys.stderr)
        return 1
    else:
        print("all reports identical across engines")
    return 0


if __name__ == "__main__":
    sys.exit(main())
