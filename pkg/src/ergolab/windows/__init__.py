"""Exact Birkhoff window statistics over cycle IR systems.

The window average at start atom x is

    f_N(x) = (1/N) * sum_{i=1..N} f(T^i x)

(the sum starts at T x, not at x).  For every start position p the
deviation |f_N - c| is compared against eps by exact integer arithmetic:
with c = p_c/q_c and window sum w,

    V(p) = q_c*w - p_c*N,     |f_N - c| <= eps  <=>  |V|*q_e <= p_e*N*q_c,

and the report aggregates counts, the restricted L1 integral and extrema
over starts whose own label lies in the restriction set R.

Window sums are cyclic; for N >= L the closed form
w = (N//L)*S_total + (N mod L window) avoids iterating N steps, and
N mod L == 0 degenerates to a constant-window report computed from label
counts alone.

Two engines produce bit-identical integer aggregates: a pure-Python
run-length segment sweep (`segments`) and an optional compiled per-atom
kernel (`_kernel` via `compiled`).  Selection: ERGOLAB_ENGINE=py|cy|auto
(auto prefers the kernel when present and operands fit its 64-bit
guards).  ERGOLAB_THREADS>1 chunks the kernel sweep; merged results are
identical for every thread count.  The brute-force oracle in `.oracle`
is a third, independent route used by tests.
"""
import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .. import cycle_ir
from . import segments
from .oracle import brute_force_oracle

logger = logging.getLogger(__name__)

try:
    from . import compiled
    HAVE_KERNEL = compiled.available()
except ImportError:  # pragma: no cover - build-environment dependent
    compiled = None
    HAVE_KERNEL = False


def default_engine() -> str:
    choice = os.environ.get("ERGOLAB_ENGINE", "auto")
    if choice not in ("auto", "py", "cy"):
        raise ValueError(f"ERGOLAB_ENGINE must be auto|py|cy, got {choice!r}")
    if choice == "cy" and not HAVE_KERNEL:
        raise RuntimeError("ERGOLAB_ENGINE=cy but the compiled kernel is not built")
    if choice == "auto":
        return "cy" if HAVE_KERNEL else "py"
    return choice


@dataclass(frozen=True)
class WindowReport:
    N: int
    c: Fraction
    eps: Fraction
    R: frozenset
    measure_within: Fraction
    l1_deviation: Fraction
    min_dev: Optional[Fraction]
    max_dev: Optional[Fraction]
    count_within: int
    count_within_strict: int
    restriction_count: int
    restriction_mass: Fraction


def normalize_predicates(ir, f, r):
    """Validate f/R label sets against the system; r=None means all labels."""
    present = set(ir.label_counts())
    f_set = frozenset(f)
    r_set = frozenset(present) if r is None else frozenset(r)
    for name, s in (("f", f_set), ("R", r_set)):
        bad = s - present
        if bad:
            raise ValueError(f"{name} labels {sorted(bad)} not present in system "
                             f"(has {sorted(present)})")
    return f_set, r_set


def window_stats(ir, f, r, n, c, eps, engine=None) -> WindowReport:
    """Exact deviation statistics of f_N against c at tolerance eps over R."""
    f_set, r_set = normalize_predicates(ir, f, r)
    if n < 1:
        raise ValueError(f"window length must be >= 1, got {n}")
    c = Fraction(c)
    eps = Fraction(eps)
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")

    big = ir.length
    counts = ir.label_counts()
    s_f = sum(counts.get(l, 0) for l in f_set)
    whole, n_eff = divmod(n, big)
    base = whole * s_f

    qc = c.denominator
    b0 = qc * base - c.numerator * n
    # |V|*q_e <= p_e*N*q_c  <=>  |V| <= t_le;  strict '<' -> t_lt
    rhs = eps.numerator * n * qc
    t_le = rhs // eps.denominator
    t_lt = -(-rhs // eps.denominator) - 1

    count_r_expected = sum(counts.get(l, 0) for l in r_set)

    if n_eff == 0:
        # every window covers whole periods: V is the same for all starts
        v = abs(b0)
        count_r = count_r_expected
        count_le = count_r if v <= t_le else 0
        count_lt = count_r if v <= t_lt else 0
        sum_abs = count_r * v
        min_abs = max_abs = (v if count_r else None)
    else:
        chosen = engine or default_engine()
        result = None
        if chosen == "cy":
            result = compiled.sweep(ir, n_eff, f_set, r_set, qc, b0, t_le, t_lt)
            if result is None:
                logger.debug("kernel guards declined (L=%d, qc=%d); "
                             "falling back to segment engine", big, qc)
        if result is None:
            result = segments.sweep(ir, n_eff, f_set, r_set, qc, b0, t_le, t_lt)
        count_r, count_le, count_lt, sum_abs, min_abs, max_abs = result

    if count_r != count_r_expected:
        raise AssertionError(
            f"engine consistency: swept {count_r} restricted starts, "
            f"label counts give {count_r_expected}")

    scale = n * qc
    return WindowReport(
        N=n, c=c, eps=eps, R=r_set,
        measure_within=Fraction(count_le, big),
        l1_deviation=Fraction(sum_abs, big * scale),
        min_dev=None if min_abs is None else Fraction(min_abs, scale),
        max_dev=None if max_abs is None else Fraction(max_abs, scale),
        count_within=count_le,
        count_within_strict=count_lt,
        restriction_count=count_r,
        restriction_mass=Fraction(count_r, big),
    )


def l1_norm_deviation(ir, f, n, a, engine=None) -> Fraction:
    """The L1 integral of |f_N - a| over the whole space."""
    return window_stats(ir, f, None, n, a, 0, engine=engine).l1_deviation
