"""Brute-force window statistics for small systems (test oracle).

Materializes the label cycle, builds an indicator prefix table over the
doubled array, then evaluates every start position directly in plain
Fraction arithmetic — no shared code and no integer cross-multiplication
tricks from the streaming engines.  Refuses L > 10^5.
"""
from fractions import Fraction

from ..cycle_ir import materialize

ORACLE_LIMIT = 100_000


def brute_force_oracle(ir, f, r, n, c, eps):
    """Same contract as window_stats; returns a WindowReport."""
    from . import WindowReport, normalize_predicates

    f_set, r_set = normalize_predicates(ir, f, r)
    if ir.length > ORACLE_LIMIT:
        raise ValueError(f"oracle refuses L={ir.length} > {ORACLE_LIMIT}")
    if n < 1:
        raise ValueError(f"window length must be >= 1, got {n}")
    c = Fraction(c)
    eps = Fraction(eps)
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")

    labels = materialize(ir)
    big = ir.length
    ind = [1 if l in f_set else 0 for l in labels]
    prefix = [0]
    for x in ind + ind:
        prefix.append(prefix[-1] + x)

    whole, part = divmod(n, big)
    base = whole * sum(ind)

    count_r = 0
    count_le = 0
    count_lt = 0
    total = Fraction(0)
    min_dev = None
    max_dev = None
    for p in range(big):
        if labels[p] not in r_set:
            continue
        count_r += 1
        w = base + prefix[p + 1 + part] - prefix[p + 1]
        dev = abs(Fraction(w, n) - c)
        if dev <= eps:
            count_le += 1
        if dev < eps:
            count_lt += 1
        total += dev
        if min_dev is None or dev < min_dev:
            min_dev = dev
        if max_dev is None or dev > max_dev:
            max_dev = dev

    return WindowReport(
        N=n, c=c, eps=eps, R=r_set,
        measure_within=Fraction(count_le, big),
        l1_deviation=total / big,
        min_dev=min_dev, max_dev=max_dev,
        count_within=count_le,
        count_within_strict=count_lt,
        restriction_count=count_r,
        restriction_mass=Fraction(count_r, big),
    )
