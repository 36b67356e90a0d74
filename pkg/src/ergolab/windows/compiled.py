"""Wrapper for the compiled per-atom window kernel.

Feeds the Cython sweep run-length arrays (one period, maximal runs) plus
per-chunk cursor states and initial window sums computed here from exact
prefix tables.  All kernel operands are pre-checked against 64-bit
bounds; `sweep` returns None when they do not fit (the dispatcher then
uses the pure-Python segment engine) — the kernel itself never wraps.

ERGOLAB_THREADS > 1 splits the start range into chunks executed on a
thread pool (the kernel releases the GIL); the merge is pure
sum/min/max, so results are bit-identical for every thread count and
chunking.
"""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import cycle_ir

try:
    from . import _kernel
except ImportError:  # pragma: no cover - build-environment dependent
    _kernel = None

MAX_RUNS = 20_000_000
OPERAND_GUARD = 1 << 61
MIN_CHUNK = 1 << 14


def available() -> bool:
    return _kernel is not None


def thread_count() -> int:
    raw = os.environ.get("ERGOLAB_THREADS", "1")
    try:
        t = int(raw)
    except ValueError:
        raise ValueError(f"ERGOLAB_THREADS must be an integer, got {raw!r}") from None
    return max(1, t)


def _build_arrays(ir, f_set, r_set):
    labels, runlen = cycle_ir.run_arrays(ir)
    nr = len(runlen)
    f_run = np.isin(labels, np.fromiter(f_set, np.int64, len(f_set))) \
        .astype(np.uint8)
    r_run = np.isin(labels, np.fromiter(r_set, np.int64, len(r_set))) \
        .astype(np.uint8)
    prefix_atoms = np.zeros(nr + 1, dtype=np.int64)
    np.cumsum(runlen, out=prefix_atoms[1:])
    prefix_f = np.zeros(nr + 1, dtype=np.int64)
    np.cumsum(runlen * f_run, out=prefix_f[1:])
    return runlen, f_run, r_run, prefix_atoms, prefix_f


def _locate(prefix_atoms, x):
    """(run index, offset) of atom position x."""
    idx = int(np.searchsorted(prefix_atoms, x, side="right")) - 1
    return idx, x - int(prefix_atoms[idx])


def _f_before(prefix_atoms, prefix_f, f_run, x):
    """Number of f-atoms among positions [0, x), 0 <= x <= L."""
    if x == int(prefix_atoms[-1]):
        return int(prefix_f[-1])
    idx, off = _locate(prefix_atoms, x)
    return int(prefix_f[idx]) + (off if f_run[idx] else 0)


def sweep(ir, n_eff, f_set, r_set, qc, b0, t_le, t_lt):
    """Kernel-backed sweep; returns the aggregate tuple or None to decline."""
    if _kernel is None:
        return None
    big = ir.length
    v_max = qc * n_eff + abs(b0)
    if v_max > OPERAND_GUARD or big >= (1 << 62):
        return None

    runlen, f_run, r_run, prefix_atoms, prefix_f = _build_arrays(ir, f_set, r_set)
    if len(runlen) > MAX_RUNS:
        return None

    def f_circ(a, b):
        """f-atoms among cyclic positions [a, b), a <= b <= a + L."""
        if b <= big:
            return (_f_before(prefix_atoms, prefix_f, f_run, b)
                    - _f_before(prefix_atoms, prefix_f, f_run, a))
        return (int(prefix_f[-1])
                - _f_before(prefix_atoms, prefix_f, f_run, a)
                + _f_before(prefix_atoms, prefix_f, f_run, b - big))

    threads = thread_count()
    nchunks = min(threads, max(1, big // MIN_CHUNK))
    bounds = [big * i // nchunks for i in range(nchunks + 1)]

    t_le_c = min(t_le, v_max)   # |V| <= v_max, so clipping cannot change counts
    t_lt_c = min(t_lt, v_max)

    def run_chunk(i):
        p0 = bounds[i]
        count = bounds[i + 1] - p0
        w0 = f_circ(p0 + 1, p0 + 1 + n_eff)
        si, soff = _locate(prefix_atoms, p0)
        hi, hoff = _locate(prefix_atoms, (p0 + 1 + n_eff) % big)
        return _kernel.sweep_chunk(runlen, f_run, r_run, count, w0,
                                   qc, b0, t_le_c, t_lt_c, si, soff, hi, hoff)

    if nchunks == 1:
        parts = [run_chunk(0)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run_chunk, range(nchunks)))

    count_r = count_le = count_lt = sum_abs = 0
    min_abs = max_abs = None
    for (c_r, c_le, c_lt, hi64, lo64, has, mn, mx) in parts:
        count_r += c_r
        count_le += c_le
        count_lt += c_lt
        sum_abs += (hi64 << 64) | lo64
        if has:
            min_abs = mn if min_abs is None else min(min_abs, mn)
            max_abs = mx if max_abs is None else max(max_abs, mx)
    return count_r, count_le, count_lt, sum_abs, min_abs, max_abs
